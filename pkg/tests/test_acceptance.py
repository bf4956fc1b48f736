"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
and enforcing its stated tolerance and runtime budget."""

import itertools
import math
import time

import numpy as np
import pytest

from qmemsim import assets, memdev, qmasm, qram
from qmemsim import metrics as M
from qmemsim import statevec as sv


class _Budget:
    """Times a criterion, prints its PASS/FAIL line, enforces the budget.

    Run this module with `pytest -s` to see the one-line-per-criterion
    report; under captured runs the lines still surface on any failure.
    """

    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.monotonic() - self.start
        status = "PASS" if exc_type is None else "FAIL"
        print(f"ACCEPTANCE {self.name}: {status} "
              f"({elapsed:.2f}s, budget {self.seconds}s)", flush=True)
        if exc_type is None:
            assert elapsed < self.seconds, \
                f"{self.name} exceeded its runtime budget: {elapsed:.2f}s"
        return False


def test_criterion_1_platform_table_regression():
    """Every recomputable cell-level platform row reproduces its published
    alpha_in/alpha_ex to +-1 unit in the last displayed significant digit."""
    with _Budget("1 (platform table regression)", 1.0):
        records = M.load_platform_dataset(assets.data_path("table1.csv"))
        names = {r.name for r in records}
        assert {"transmon", "fluxonium", "mw-cavity-3d", "trapped-ion-ca-optical",
                "neutral-atom-rb", "neutral-atom-yb", "atomic-cloud-optical",
                "phonon-ghz-mw", "phonon-ghz-mw-sc"} <= names
        rows = M.check_against_expected(
            records, M.load_expected(assets.data_path("table1_expected.csv")))
        assert len(rows) >= 20
        failed = [r for r in rows if not r.passed]
        assert not failed, failed
        by = {(r.name, r.metric): r.computed for r in rows}
        assert M.matches_printed(by[("transmon", "alpha_in")], "1.39e4")
        assert M.matches_printed(by[("mw-cavity-3d", "alpha_in")], "3.38e4")
        assert M.matches_printed(by[("mw-cavity-3d", "alpha_ex")], "8.44e5")


def test_criterion_2_raqm_derived_ranges():
    """Device-level metrics for the RAQM demonstrations land on the published
    endpoints at printed precision."""
    with _Budget("2 (RAQM metric ranges)", 1.0):
        records = {r.name: r for r in
                   M.load_platform_dataset(assets.data_path("table3_raqm.csv"))}
        expectations = {
            "naik-2d-worst": {"alpha_qmd": "7.5", "gamma": "1.20"},
            "naik-2d-best": {"alpha_qmd": "415", "gamma": "2.16e-2"},
            "jiang-cloud-low": {"alpha_qmd": "39", "beta": "0.037"},
            "jiang-cloud-high": {"alpha_qmd": "118", "beta": "0.012"},
            "langenfeld-atom": {"alpha_qmd": "8.2", "beta": "4.1"},
            "langenfeld-atom-improved": {"alpha_qmd": "2.0e2", "beta": "0.21",
                                         "gamma": "0.01"},
        }
        for name, expected in expectations.items():
            m = M.qmd_metrics(records[name])
            for metric, printed in expected.items():
                value = getattr(m, metric)
                assert M.matches_printed(value, printed), \
                    (name, metric, value, printed)


def test_criterion_3_sign_rule_property():
    """10,000 randomized records satisfy alpha_ex<0 <=> alpha_in<2 and
    gamma*alpha_qmd = N/n within 1e-12 relative."""
    with _Budget("3 (sign rule, 10k records)", 5.0):
        rng = np.random.default_rng(2024)
        for _ in range(10_000):
            n_cells = int(rng.integers(1, 4096))
            rec = M.PlatformRecord(
                name="rand",
                t_storage=float(10 ** rng.uniform(-8, 3)),
                tau_rw=float(10 ** rng.uniform(-10, 1)),
                eta=float(rng.uniform(0.01, 1.0)),
                t_op=float(10 ** rng.uniform(-9, 0)),
                t_addr=float(10 ** rng.uniform(-12, -3)) if rng.random() < 0.5 else 0.0,
                n_cells=n_cells,
                n_parallel=int(rng.integers(1, n_cells + 1)),
            )
            m = M.qmd_metrics(rec)
            assert (m.alpha_ex < 0) == (m.alpha_in < 2)
            target = rec.n_cells / rec.n_parallel
            assert abs(m.gamma * m.alpha_qmd - target) <= 1e-12 * target


def test_criterion_4_oracle_correctness():
    """For n=2,3,4 and 20 random data vectors each: basis addresses give
    exactly |j>|x_j>, uniform addresses give amplitude 2^{-n/2} at exactly
    the (j, x_j) positions (1e-10)."""
    with _Budget("4 (oracle correctness)", 10.0):
        for n in (2, 3, 4):
            rng = np.random.default_rng(100 + n)
            for _ in range(20):
                data = [int(b) for b in rng.integers(0, 2, 1 << n)]
                device = qram.QramDevice(addr_len=n)
                qram.qinit_load(device, data)
                # every computational-basis address
                for j in range(1 << n):
                    state = sv.init_state(n + 1, basis_index=j)
                    qram.oracle_query(device, state, tuple(range(n)), (n,))
                    expect_idx = j | (data[j] << n)
                    assert state.amps[expect_idx] == 1.0 + 0.0j
                    assert np.sum(np.abs(state.amps) > 0) == 1
                # uniform superposition of addresses
                state = sv.init_state(n + 1)
                for q in range(n):
                    sv.apply_gate(state, sv.gate("h", (q,)))
                qram.oracle_query(device, state, tuple(range(n)), (n,))
                amp = 2 ** (-n / 2)
                for j in range(1 << n):
                    hit = j | (data[j] << n)
                    miss = j | ((1 - data[j]) << n)
                    assert abs(state.amps[hit] - amp) < 1e-10
                    assert abs(state.amps[miss]) < 1e-10


def test_criterion_5_backend_equivalence():
    """Circuit backend matches the functional backend (fidelity >= 1-1e-9)
    and restores every router/channel to |0> (purity >= 1-1e-9) for all 8
    modes, n <= 3, over >= 50 seeds per mode (17 seeds at each n)."""
    with _Budget("5 (backend equivalence)", 120.0):
        seeds_per_n = 17
        failures = []
        for mode in qram.ALL_MODES:
            for n in (1, 2, 3):
                for seed in range(seeds_per_n):
                    r = qram.check_mode(n, mode, seed)
                    if not (r.fidelity >= 1 - 1e-9 and r.ancilla_purity >= 1 - 1e-9):
                        failures.append((n, mode.name, seed, r.fidelity,
                                         r.ancilla_purity))
        assert not failures, failures[:5]


def test_criterion_6_table4_classification():
    """Each mode's entanglement profile reproduces the published pattern on
    generic 2-address-qubit inputs: product subsystems at purity >= 1-1e-6,
    entangled ones at purity <= 1-1e-3."""
    with _Budget("6 (entanglement patterns)", 10.0):
        product_tol, entangle_tol = 1e-6, 1e-3
        for mode in qram.ALL_MODES:
            expected = qram.MODE_PATTERNS[mode.name]
            for seed in range(5):
                profile = qram.profile_mode(2, mode, seed)
                assert profile.pattern == expected, \
                    (mode.name, seed, profile.purities)
                p = profile.purities
                if expected == qram.PATTERN_ADDR_BUS:
                    assert p["memory"] >= 1 - product_tol
                    assert p["addr+bus"] >= 1 - product_tol
                    assert p["addr"] <= 1 - entangle_tol
                    assert p["bus"] <= 1 - entangle_tol
                elif expected == qram.PATTERN_ADDR_MEM:
                    assert p["bus"] >= 1 - product_tol
                    assert p["addr+memory"] >= 1 - product_tol
                    assert p["addr"] <= 1 - entangle_tol
                    assert p["memory"] <= 1 - entangle_tol
                else:
                    assert p["addr"] <= 1 - entangle_tol
                    assert p["bus"] <= 1 - entangle_tol
                    assert p["memory"] <= 1 - entangle_tol


def test_criterion_7_raqm_and_buffer_properties():
    """100 random store/load round trips at fidelity >= 1-1e-12; Bell-half
    storage gives cell purity 0.5 +- 1e-9; exhaustive FIFO conformance for
    capacity <= 3 over all R/W sequences of length <= 6 with paper-exact
    S/F bits."""
    with _Budget("7 (RAQM/buffer properties)", 30.0):
        rng = np.random.default_rng(7)
        # store/load round trips
        for _ in range(100):
            state = sv.init_state(5)
            dev = memdev.RaqmDevice(cell_qubits=(1, 2, 3, 4))
            amps = rng.normal(size=2) + 1j * rng.normal(size=2)
            amps /= np.linalg.norm(amps)
            theta = 2 * math.atan2(abs(amps[1]), abs(amps[0]))
            phi = float(np.angle(amps[1]) - np.angle(amps[0]))
            sv.apply_gate(state, sv.gate("u", (0,), (theta, phi, 0.0)))
            ref = state.copy()
            addr = int(rng.integers(4))
            memdev.raqm_store(dev, state, addr, bus=0)
            memdev.raqm_load(dev, state, addr, bus=0)
            assert sv.state_fidelity(ref, state) >= 1 - 1e-12

        # Bell-half storage
        state = sv.init_state(3)
        dev = memdev.RaqmDevice(cell_qubits=(2,))
        sv.apply_gate(state, sv.gate("h", (1,)))
        sv.apply_gate(state, sv.gate("cnot", (1, 0)))
        memdev.raqm_store(dev, state, 0, bus=0)
        assert abs(sv.reduced_purity(state, [2]) - 0.5) <= 1e-9

        # exhaustive FIFO conformance
        checked = 0
        for capacity in (1, 2, 3):
            for length in range(1, 7):
                for ops in itertools.product("WR", repeat=length):
                    _run_fifo_sequence(capacity, ops)
                    checked += 1
        assert checked == 3 * (2 + 4 + 8 + 16 + 32 + 64)


def _run_fifo_sequence(capacity, ops):
    """Drive a buffer through one R/W sequence, checking the status bits and
    the full quantum state against a classical FIFO model after every step."""
    state = sv.init_state(1 + capacity)
    dev = memdev.BufferDevice(cell_qubits=tuple(range(1, 1 + capacity)))
    # distinct, well-separated payloads for each write event
    payloads = [(0.9 + 0.45 * k, 0.3 * k, 0.2) for k in range(len(ops))]
    model = []          # list of (cell, payload) in FIFO order
    bus_payload = None  # payload currently sitting on the bus
    writes = 0

    def expected_state():
        exp = sv.init_state(1 + capacity)
        for cell, params in model:
            sv.apply_gate(exp, sv.gate("u", (1 + cell,), params))
        if bus_payload is not None:
            sv.apply_gate(exp, sv.gate("u", (0,), bus_payload))
        return exp

    for op in ops:
        if op == "W":
            if bus_payload is not None:
                # clear the bus before preparing the next payload
                theta, phi, lam = bus_payload
                sv.apply_gate(state, sv.gate("u", (0,), (-theta, -lam, -phi)))
                bus_payload = None
            params = payloads[writes]
            writes += 1
            sv.apply_gate(state, sv.gate("u", (0,), params))
            status, _ = memdev.buffer_write(dev, state, bus=0)
            if len(model) < capacity:
                free = min(set(range(capacity)) - {c for c, _ in model})
                model.append((free, params))
                assert status is memdev.BufferStatus.WRITE_STORED
                assert status.sf_bit == 0
            else:
                bus_payload = params  # rejected write leaves the bus loaded
                assert status is memdev.BufferStatus.WRITE_OVERFLOW
                assert status.sf_bit == 1
        else:
            if bus_payload is not None:
                theta, phi, lam = bus_payload
                sv.apply_gate(state, sv.gate("u", (0,), (-theta, -lam, -phi)))
                bus_payload = None
            status, _ = memdev.buffer_read(dev, state, bus=0)
            if model:
                _, params = model.pop(0)
                bus_payload = params  # oldest payload must appear on the bus
                assert status is memdev.BufferStatus.READ_SUCCESS
                assert status.sf_bit == 1
            else:
                assert status is memdev.BufferStatus.READ_UNDERFLOW
                assert status.sf_bit == 0
        assert sv.state_fidelity(state, expected_state()) >= 1 - 1e-12
        assert dev.fifo_queue == [c for c, _ in model]


def test_criterion_8_encoding_qft_end_to_end():
    """The padded QFT example parses and, post-selected on caux[0]=1,
    matches its flattened-circuit replay (>= 1-1e-9); caux[0]=1 frequency
    over 2000 seeded shots is 0.5 +- 0.05; the cleaned variant's memory
    cells equal the 16-point DFT of the encoded state (>= 1-1e-9)."""
    with _Budget("8 (amplitude-encoding + QFT end-to-end)", 60.0):
        padded = qmasm.parse_program(
            assets.example_path("qft_amplitude.qmasm").read_text())
        assert any("zero-padded" in w for w in padded.warnings)
        clean = qmasm.parse_program(
            assets.example_path("qft_amplitude_clean.qmasm").read_text())

        post = qmasm.RunConfig(post_select={("caux", 0): 1})
        for program in (padded, clean):
            res = qmasm.execute(program, 7, post)
            assert res.status == "ok"
            replayed = qmasm.replay_trace(res.trace, res.num_qubits)
            fid = abs(np.vdot(replayed.amps, res.final_state.amps)) ** 2
            assert fid >= 1 - 1e-9

        # empirical aux frequency: P(caux[0]=1) = ones(padded vec)/16 = 0.5
        ones = 0
        for seed in range(2000):
            r = qmasm.execute(padded, seed)
            assert r.status == "ok"
            ones += r.classical["caux"][0]
        assert abs(ones / 2000 - 0.5) <= 0.05

        # cleaned variant: cells 0..3 hold the DFT of the encoded state
        res = qmasm.execute(clean, 7, post)
        amps = res.final_state.amps
        cells = np.array([amps[(1 << 5) | (k << 6)] for k in range(16)])
        vec = [0, 1, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1, 0, 1, 0, 0]
        support = [j for j, b in enumerate(vec) if b]
        encoded = np.zeros(16, dtype=complex)
        encoded[support] = 1 / math.sqrt(len(support))
        kernel = np.exp(2j * np.pi * np.outer(np.arange(16), np.arange(16)) / 16) / 4.0
        target = kernel @ encoded
        fid = abs(np.vdot(target, cells)) ** 2
        assert fid >= 1 - 1e-9


def test_criterion_9_survey_values_enter_as_fixtures_only():
    """The platform-survey measurements are not reproducible in software;
    they enter the artifact solely as dataset fixtures with provenance
    notes, which criterion 1 regresses. Nothing else claims to reproduce
    experimental results."""
    with _Budget("9 (fixtures-only scope)", 1.0):
        for name in ("table1.csv", "table3_raqm.csv"):
            records = M.load_platform_dataset(assets.data_path(name))
            assert all(r.notes for r in records), "every row carries provenance"
        marked = [r for r in M.load_platform_dataset(assets.data_path("table3_raqm.csv"))
                  if M.NON_RECOMPUTABLE in r.notes]
        assert marked, "rows that cannot be recomputed are marked, not invented"
