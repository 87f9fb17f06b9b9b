import itertools
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from annealtopt import (
    QuboProblem,
    SaParams,
    SolveError,
    build_qubo,
    delta_energy,
    evaluate,
    from_exchange,
    init_design,
    make_layout,
    read_exchange,
    solve_exhaustive,
    solve_remote,
    solve_sa,
    to_exchange,
    write_exchange,
)
from tests.test_qubo import two_qubit_instance


def random_qubo(rng, n, with_rank_one=True):
    linear = rng.normal(0, 1, n)
    quadratic = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.4:
                quadratic[(i, j)] = float(rng.normal(0, 1))
    phi = rng.uniform(0, 0.3, n) if with_rank_one else None
    lam = float(rng.uniform(0.5, 5.0)) if with_rank_one else 0.0
    return QuboProblem(
        linear=linear,
        offset=float(rng.normal()),
        lam=lam,
        phi=phi,
        quadratic=quadratic,
    )


def brute_force(qubo):
    """Independent enumeration using only evaluate()."""
    best = (np.inf, None)
    for bits in itertools.product((0, 1), repeat=qubo.n_qubits):
        e = evaluate(qubo, np.array(bits))
        if e < best[0]:
            best = (e, np.array(bits, dtype=np.int8))
    return best


# --- exhaustive -------------------------------------------------------------

def test_exhaustive_on_hand_instance():
    _, _, _, _, q = two_qubit_instance()
    out = solve_exhaustive(q)
    np.testing.assert_array_equal(out.bits, [1, 1])
    assert out.energy == pytest.approx(-1.2755, abs=1e-12)
    assert out.samples == 4


def test_exhaustive_tie_break_on_zero_problem():
    q = QuboProblem(linear=np.zeros(5), offset=2.5)
    out = solve_exhaustive(q)
    np.testing.assert_array_equal(out.bits, 0)
    assert out.energy == 2.5


def test_exhaustive_sign_test():
    q = QuboProblem(linear=np.array([3.0]), offset=0.0)
    assert solve_exhaustive(q).bits[0] == 0
    q = QuboProblem(linear=np.array([-3.0]), offset=0.0)
    assert solve_exhaustive(q).bits[0] == 1


def test_exhaustive_matches_brute_force():
    rng = np.random.default_rng(1)
    for trial in range(10):
        q = random_qubo(rng, int(rng.integers(2, 10)))
        out = solve_exhaustive(q)
        best_e, _ = brute_force(q)
        assert out.energy == pytest.approx(best_e, rel=1e-12), trial
        assert out.energy == pytest.approx(evaluate(q, out.bits), rel=0)


def test_exhaustive_cap():
    q = QuboProblem(linear=np.zeros(25), offset=0.0)
    with pytest.raises(SolveError, match="cap"):
        solve_exhaustive(q, max_qubits=24)


def test_exhaustive_spans_chunks():
    # more qubits than one enumeration chunk (2**18) to cover chunking
    rng = np.random.default_rng(9)
    q = random_qubo(rng, 20)
    out = solve_exhaustive(q)
    best_e = None
    # vectorized reference on all 2^20 assignments
    m = np.arange(1 << 20, dtype=np.uint64)
    bits = ((m[:, None] >> np.arange(20, dtype=np.uint64)) & np.uint64(1)).astype(float)
    e = q.offset + bits @ q.linear
    g = bits @ q.phi
    e += q.lam * (g * g - bits @ (q.phi ** 2))
    qi, qj, qv = q.quad_arrays()
    e += (bits[:, qi] * bits[:, qj]) @ qv
    best_e = e.min()
    assert out.energy == pytest.approx(best_e, rel=1e-12)


# --- delta energy -----------------------------------------------------------

def test_delta_energy_hand_value():
    _, _, _, _, q = two_qubit_instance()
    assert delta_energy(q, np.array([0, 0]), 0) == pytest.approx(-6.1875, abs=1e-12)


def test_delta_energy_involution():
    rng = np.random.default_rng(2)
    q = random_qubo(rng, 8)
    bits = rng.integers(0, 2, 8).astype(np.int8)
    for i in range(8):
        d1 = delta_energy(q, bits, i)
        flipped = bits.copy()
        flipped[i] ^= 1
        d2 = delta_energy(q, flipped, i)
        assert d1 + d2 == pytest.approx(0.0, abs=1e-12)


def test_delta_energy_zero_problem():
    q = QuboProblem(linear=np.zeros(4), offset=1.0)
    assert delta_energy(q, np.zeros(4, dtype=int), 2) == 0.0


def test_delta_energy_matches_full_reevaluation():
    rng = np.random.default_rng(3)
    for _ in range(10):
        q = random_qubo(rng, 12)
        bits = rng.integers(0, 2, 12).astype(np.int8)
        i = int(rng.integers(0, 12))
        flipped = bits.copy()
        flipped[i] ^= 1
        expected = evaluate(q, flipped) - evaluate(q, bits)
        got = delta_energy(q, bits, i)
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_chained_deltas_track_full_evaluation():
    rng = np.random.default_rng(4)
    q = random_qubo(rng, 16)
    bits = rng.integers(0, 2, 16).astype(np.int8)
    energy = evaluate(q, bits)
    for _ in range(5000):
        i = int(rng.integers(0, 16))
        energy += delta_energy(q, bits, i)
        bits[i] ^= 1
    assert abs(energy - evaluate(q, bits)) <= 1e-9


# --- simulated annealing ----------------------------------------------------

def test_sa_finds_hand_instance_ground_state():
    _, _, _, _, q = two_qubit_instance()
    for seed in (0, 1, 99):
        out = solve_sa(q, SaParams(seed=seed))
        np.testing.assert_array_equal(out.bits, [1, 1])
        assert out.energy == pytest.approx(-1.2755, abs=1e-12)


def test_sa_reproducible_for_fixed_seed():
    rng = np.random.default_rng(6)
    q = random_qubo(rng, 30)
    a = solve_sa(q, SaParams(seed=42, sweeps=200, restarts=3))
    b = solve_sa(q, SaParams(seed=42, sweeps=200, restarts=3))
    np.testing.assert_array_equal(a.bits, b.bits)
    assert a.energy == b.energy


def test_sa_energy_equals_reevaluation():
    rng = np.random.default_rng(7)
    q = random_qubo(rng, 24)
    out = solve_sa(q, SaParams(seed=0, sweeps=100, restarts=2))
    assert out.energy == evaluate(q, out.bits)


def test_sa_matches_exhaustive_on_random_instances():
    rng = np.random.default_rng(12)
    q = random_qubo(rng, 16)
    reference = solve_exhaustive(q).energy
    hits = sum(
        solve_sa(q, SaParams(seed=seed)).energy == pytest.approx(reference, rel=1e-12)
        for seed in range(100)
    )
    assert hits >= 95


def test_sa_rejects_bad_params():
    q = QuboProblem(linear=np.zeros(3), offset=0.0)
    with pytest.raises(SolveError):
        solve_sa(q, SaParams(sweeps=0))
    with pytest.raises(SolveError):
        solve_sa(q, SaParams(restarts=0))
    with pytest.raises(SolveError):
        solve_sa(q, SaParams(cooling=1.0))


def test_sa_handles_zero_problem():
    q = QuboProblem(linear=np.zeros(6), offset=0.0)
    out = solve_sa(q, SaParams(seed=0, sweeps=10, restarts=1))
    assert out.energy == 0.0


def test_sa_accepts_fixed_initial_temperature():
    _, _, _, _, q = two_qubit_instance()
    out = solve_sa(q, SaParams(seed=0, t0=5.0))
    np.testing.assert_array_equal(out.bits, [1, 1])


# --- exchange format --------------------------------------------------------

def test_exchange_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    q = random_qubo(rng, 9)
    path = tmp_path / "problem.qubo.json"
    write_exchange(q, path)
    again = read_exchange(path)
    for _ in range(30):
        bits = rng.integers(0, 2, 9)
        assert evaluate(again, bits) == pytest.approx(evaluate(q, bits), rel=1e-12)


def test_exchange_structure():
    _, _, _, _, q = two_qubit_instance()
    raw = to_exchange(q)
    assert raw["n"] == 2
    assert raw["offset"] == 5.0
    assert raw["quadratic"] == [[0, 1, pytest.approx(0.11, abs=1e-12)]]
    pairs = {tuple(entry[:2]) for entry in raw["quadratic"]}
    assert all(i < j for i, j in pairs)


def test_exchange_rejects_bad_pairs():
    with pytest.raises(SolveError):
        from_exchange({"n": 3, "offset": 0, "linear": [], "quadratic": [[2, 1, 0.5]]})


# --- remote adapter ---------------------------------------------------------

class _StubHandler(BaseHTTPRequestHandler):
    mode = "exact"

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        raw = json.loads(self.rfile.read(length))
        q = from_exchange(raw)
        out = solve_exhaustive(q)
        reply = {"bits": [int(b) for b in out.bits], "energy": out.energy}
        if self.mode == "wrong_energy":
            reply["energy"] = out.energy + 123.0
        elif self.mode == "garbage":
            reply = {"surprise": True}
        body = json.dumps(reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/"
    server.shutdown()


def test_remote_matches_exhaustive(stub_server):
    _StubHandler.mode = "exact"
    _, _, _, _, q = two_qubit_instance()
    out = solve_remote(q, stub_server)
    ref = solve_exhaustive(q)
    np.testing.assert_array_equal(out.bits, ref.bits)
    assert out.energy == ref.energy


def test_remote_wrong_energy_is_recomputed_locally(stub_server):
    _StubHandler.mode = "wrong_energy"
    _, _, _, _, q = two_qubit_instance()
    out = solve_remote(q, stub_server)
    assert out.energy == evaluate(q, out.bits)


def test_remote_malformed_response(stub_server):
    _StubHandler.mode = "garbage"
    _, _, _, _, q = two_qubit_instance()
    with pytest.raises(SolveError, match="malformed"):
        solve_remote(q, stub_server)


def test_remote_unreachable_endpoint():
    _, _, _, _, q = two_qubit_instance()
    with pytest.raises(SolveError, match="network"):
        solve_remote(q, "http://127.0.0.1:9/", timeout=0.5)


# --- first-iteration instances from a benchmark -----------------------------

def test_sa_agrees_with_exhaustive_on_truss_instance():
    from annealtopt import build_benchmark, fem

    problem = build_benchmark("truss6")
    state = init_design(6, 0.35, 1.1)
    _, _, se, _ = fem.solve_problem(problem, state.rho)
    layout = make_layout(6, 1, 1)
    q = build_qubo(problem, state, se, 5.0, 0.02, problem.v_target, layout)
    ref = solve_exhaustive(q)
    out = solve_sa(q, SaParams(seed=5))
    assert out.energy == pytest.approx(ref.energy, rel=1e-12)
