"""Ground-state search for QuboProblem instances.

Three interchangeable solvers: exhaustive enumeration (the oracle, capped
at a configurable qubit count), single-flip Metropolis simulated annealing
with geometric cooling, and a thin HTTP adapter that ships the problem to
a remote annealing service.  Every solver reports the energy obtained by
locally re-evaluating its best bits, so reported energies are trustworthy
regardless of what the search (or the remote service) claims.
"""

import json
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

import numpy as np
from numba import njit

from .qubo import QuboProblem, evaluate


class SolveError(RuntimeError):
    """Solver failure: size cap, bad parameters, network, or bad response."""


@dataclass
class SaParams:
    """Simulated annealing controls.

    ``t0 = None`` auto-sets the initial temperature per restart to the
    90th percentile of |dE| over a 100-flip random probe.  Restarts run
    on independent seeded streams derived from (seed, restart index).
    """

    sweeps: int = 2000
    restarts: int = 10
    t0: float = None
    cooling: float = 0.98
    seed: int = 0


@dataclass
class SolveOutcome:
    """Best assignment found, its locally verified energy, and effort."""

    bits: np.ndarray
    energy: float
    samples: int
    time_s: float


def bits_as_int_less(a, b):
    """True if bit vector ``a`` < ``b`` read as little-endian integers."""
    for j in range(len(a) - 1, -1, -1):
        if a[j] != b[j]:
            return a[j] < b[j]
    return False


def _phi_lam(qubo):
    if qubo.phi is not None and qubo.lam != 0.0:
        return qubo.phi.astype(float), float(qubo.lam)
    return np.zeros(qubo.n_qubits), 0.0


_EXHAUSTIVE_CHUNK = 1 << 18


def solve_exhaustive(qubo, max_qubits=24):
    """Enumerate all assignments; ties break to the lowest bit integer.

    Bit j of the enumeration integer maps to qubit j, so the qubit vector
    read little-endian is the integer itself and the tie-break is simply
    the smallest enumerated index among the minima.
    """
    n = qubo.n_qubits
    if n > max_qubits:
        raise SolveError(
            f"exhaustive search needs {n} qubits, above the cap {max_qubits}"
        )
    t_start = time.perf_counter()
    phi, lam = _phi_lam(qubo)
    qi, qj, qv = qubo.quad_arrays()
    shifts = np.arange(n, dtype=np.uint64)
    total = 1 << n
    best_energy = np.inf
    best_m = 0
    for lo in range(0, total, _EXHAUSTIVE_CHUNK):
        hi = min(lo + _EXHAUSTIVE_CHUNK, total)
        m = np.arange(lo, hi, dtype=np.uint64)
        bits = ((m[:, None] >> shifts) & np.uint64(1)).astype(float)
        energy = qubo.offset + bits @ qubo.linear
        if lam != 0.0:
            g = bits @ phi
            energy += lam * (g * g - bits @ (phi ** 2))
        if len(qv):
            energy += (bits[:, qi] * bits[:, qj]) @ qv
        k = int(np.argmin(energy))
        if energy[k] < best_energy:
            best_energy = float(energy[k])
            best_m = lo + k
    bits = ((np.uint64(best_m) >> shifts) & np.uint64(1)).astype(np.int8)
    return SolveOutcome(
        bits=bits,
        energy=evaluate(qubo, bits),
        samples=total,
        time_s=time.perf_counter() - t_start,
    )


def delta_energy(qubo, bits, index, volume_sum=None):
    """Energy change from flipping one bit, without re-evaluating.

    Exact to rounding: uses the factored pair structure, so the cost is
    O(explicit degree of ``index``), or O(1) when the caller passes the
    running weighted sum ``volume_sum = phi . bits``.
    """
    bits = np.asarray(bits)
    b = float(bits[index])
    s = 1.0 - 2.0 * b
    de = s * float(qubo.linear[index])
    if qubo.phi is not None and qubo.lam != 0.0:
        g = float(qubo.phi @ bits) if volume_sum is None else float(volume_sum)
        de += 2.0 * qubo.lam * s * qubo.phi[index] * (g - b * qubo.phi[index])
    if qubo.quadratic:
        adj = _adjacency(qubo)
        for j, v in adj.get(index, ()):
            de += s * v * float(bits[j])
    return de


def _adjacency(qubo):
    adj = getattr(qubo, "_adjacency", None)
    if adj is None:
        adj = {}
        for (i, j), v in qubo.quadratic.items():
            adj.setdefault(i, []).append((j, v))
            adj.setdefault(j, []).append((i, v))
        qubo._adjacency = adj
    return adj


@njit(cache=True)
def _sa_restart(linear, phi, lam, indptr, indices, data, sweeps, cooling, t0, seed,
                best_bits):
    """One annealing restart.  Writes the best bits found; returns its
    relative energy (exact energy is recomputed by the caller)."""
    np.random.seed(seed)
    n = linear.shape[0]
    bits = (np.random.randint(0, 2, n)).astype(np.int8)

    # running sums: g = phi . q, h = phi^2 . q, e = energy minus offset
    g = 0.0
    h = 0.0
    e = 0.0
    for i in range(n):
        if bits[i]:
            e += linear[i]
            g += phi[i]
            h += phi[i] * phi[i]
    e += lam * (g * g - h)
    for i in range(n):
        if bits[i]:
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if bits[j] and j > i:
                    e += data[p]

    # temperature probe: 90th percentile |dE| over 100 proposed flips
    if t0 <= 0.0:
        probe = np.empty(100)
        for k in range(100):
            i = np.random.randint(0, n)
            s = 1.0 - 2.0 * bits[i]
            de = s * linear[i] + 2.0 * lam * s * phi[i] * (g - bits[i] * phi[i])
            for p in range(indptr[i], indptr[i + 1]):
                de += s * data[p] * bits[indices[p]]
            probe[k] = abs(de)
        probe.sort()
        t0 = probe[89]
        if t0 <= 0.0:
            t0 = 1e-12

    best_e = e
    best_bits[:] = bits
    temp = t0
    for sweep in range(sweeps):
        for _ in range(n):
            i = np.random.randint(0, n)
            s = 1.0 - 2.0 * bits[i]
            de = s * linear[i] + 2.0 * lam * s * phi[i] * (g - bits[i] * phi[i])
            for p in range(indptr[i], indptr[i + 1]):
                de += s * data[p] * bits[indices[p]]
            if de <= 0.0 or np.random.random() < np.exp(-de / temp):
                bits[i] = 1 - bits[i]
                g += s * phi[i]
                e += de
                if e < best_e:
                    best_e = e
                    best_bits[:] = bits
        temp *= cooling
        if (sweep + 1) % 256 == 0:
            # resync the running sums to kill float drift on long chains
            g = 0.0
            e = 0.0
            h = 0.0
            for i in range(n):
                if bits[i]:
                    e += linear[i]
                    g += phi[i]
                    h += phi[i] * phi[i]
            e += lam * (g * g - h)
            for i in range(n):
                if bits[i]:
                    for p in range(indptr[i], indptr[i + 1]):
                        j = indices[p]
                        if bits[j] and j > i:
                            e += data[p]
    return best_e


def _symmetric_csr(qubo):
    """Explicit pair coefficients as a symmetric CSR adjacency."""
    n = qubo.n_qubits
    if not qubo.quadratic:
        return (
            np.zeros(n + 1, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            np.zeros(0),
        )
    qi, qj, qv = qubo.quad_arrays()
    rows = np.concatenate([qi, qj])
    cols = np.concatenate([qj, qi])
    vals = np.concatenate([qv, qv])
    order = np.argsort(rows, kind="stable")
    rows, cols, vals = rows[order], cols[order], vals[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, cols.astype(np.int64), vals.astype(float)


def solve_sa(qubo, params=None):
    """Simulated annealing: best-of-restarts single-flip Metropolis search.

    Deterministic for a fixed seed; the restart streams are derived from
    (seed, restart index) so the result does not depend on execution
    order.  Ties between restarts break to the lowest bit integer.
    """
    if params is None:
        params = SaParams()
    if params.sweeps < 1:
        raise SolveError(f"sweeps must be >= 1, got {params.sweeps}")
    if params.restarts < 1:
        raise SolveError(f"restarts must be >= 1, got {params.restarts}")
    if not (0.0 < params.cooling < 1.0):
        raise SolveError(f"cooling factor must lie in (0, 1), got {params.cooling}")

    n = qubo.n_qubits
    phi, lam = _phi_lam(qubo)
    indptr, indices, data = _symmetric_csr(qubo)
    t0 = 0.0 if params.t0 is None else float(params.t0)
    children = np.random.SeedSequence(params.seed).spawn(params.restarts)
    seeds = [int(c.generate_state(1)[0]) for c in children]

    t_start = time.perf_counter()
    best_bits = None
    best_energy = np.inf
    scratch = np.zeros(n, dtype=np.int8)
    for seed in seeds:
        _sa_restart(
            qubo.linear.astype(float), phi, lam, indptr, indices, data,
            params.sweeps, params.cooling, t0, seed, scratch,
        )
        energy = evaluate(qubo, scratch)
        if energy < best_energy or (
            energy == best_energy and bits_as_int_less(scratch, best_bits)
        ):
            best_energy = energy
            best_bits = scratch.copy()
    probe = 100 if params.t0 is None else 0
    return SolveOutcome(
        bits=best_bits,
        energy=best_energy,
        samples=params.restarts * (params.sweeps * n + probe),
        time_s=time.perf_counter() - t_start,
    )


# ---------------------------------------------------------------------------
# exchange format and remote adapter

def to_exchange(qubo):
    """Problem as the wire/file dictionary (pairs fully materialized)."""
    mat = qubo.materialized()
    linear = [[int(i), float(v)] for i, v in enumerate(mat.linear) if v != 0.0]
    quadratic = [
        [int(i), int(j), float(v)]
        for (i, j), v in sorted(mat.quadratic.items())
        if v != 0.0
    ]
    return {
        "n": int(qubo.n_qubits),
        "offset": float(qubo.offset),
        "linear": linear,
        "quadratic": quadratic,
    }


def from_exchange(raw):
    """Parse the wire/file dictionary back into a QuboProblem."""
    n = int(raw["n"])
    linear = np.zeros(n)
    for i, v in raw["linear"]:
        linear[int(i)] = float(v)
    quadratic = {}
    for i, j, v in raw["quadratic"]:
        i, j = int(i), int(j)
        if not (0 <= i < j < n):
            raise SolveError(f"bad pair indices ({i}, {j}) in exchange data")
        quadratic[(i, j)] = float(v)
    return QuboProblem(
        linear=linear, offset=float(raw.get("offset", 0.0)), quadratic=quadratic
    )


def write_exchange(qubo, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_exchange(qubo), fh)
        fh.write("\n")


def read_exchange(path):
    with open(path, "r", encoding="utf-8") as fh:
        return from_exchange(json.load(fh))


def solve_remote(qubo, endpoint, timeout=60.0):
    """Submit the problem to an HTTP annealing service and parse the reply.

    Expects a JSON body ``{"bits": [0|1, ...], "energy": v}``.  The
    returned energy is always the local re-evaluation of the returned
    bits; a mismatching remote energy is ignored.
    """
    payload = json.dumps(to_exchange(qubo)).encode("utf-8")
    request = urllib.request.Request(
        endpoint, data=payload, headers={"Content-Type": "application/json"}
    )
    t_start = time.perf_counter()
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            body = response.read()
    except (urllib.error.URLError, OSError) as exc:
        raise SolveError(f"network error talking to {endpoint}: {exc}") from exc
    elapsed = time.perf_counter() - t_start
    try:
        reply = json.loads(body)
        bits = np.asarray(reply["bits"], dtype=np.int8)
    except (ValueError, KeyError, TypeError) as exc:
        raise SolveError(f"malformed response from {endpoint}: {exc}") from exc
    if bits.shape != (qubo.n_qubits,) or not np.isin(bits, (0, 1)).all():
        raise SolveError(
            f"malformed response from {endpoint}: expected {qubo.n_qubits} bits of 0/1"
        )
    return SolveOutcome(
        bits=bits,
        energy=evaluate(qubo, bits),
        samples=1,
        time_s=elapsed,
    )
