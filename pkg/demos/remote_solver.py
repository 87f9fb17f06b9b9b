"""Round-trip a cost function through the HTTP solver adapter.

Starts a throwaway local service that answers with the exhaustive ground
state, then submits the first-iteration problem of the 6-member truss to
it.  The adapter re-evaluates the returned bits locally, so a service
reporting nonsense energies cannot corrupt a run.

Run:  python demos/remote_solver.py
"""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

from annealtopt import (
    build_benchmark,
    build_qubo,
    fem,
    init_design,
    make_layout,
    solve_exhaustive,
    solve_remote,
    to_exchange,
)
from annealtopt.solvers import from_exchange


class GroundStateService(BaseHTTPRequestHandler):
    def do_POST(self):
        raw = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        out = solve_exhaustive(from_exchange(raw))
        body = json.dumps({
            "bits": [int(b) for b in out.bits],
            "energy": out.energy + 1e9,  # deliberately wrong: ignored
        }).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


server = HTTPServer(("127.0.0.1", 0), GroundStateService)
threading.Thread(target=server.serve_forever, daemon=True).start()
endpoint = f"http://127.0.0.1:{server.server_address[1]}/"
print(f"stub annealing service at {endpoint}")

problem = build_benchmark("truss6")
state = init_design(6, 0.35, 1.1)
_, _, se, _ = fem.solve_problem(problem, state.rho)
layout = make_layout(6, 1, 1)
q = build_qubo(problem, state, se, 5.0, 0.02, problem.v_target, layout)

wire = to_exchange(q)
print(f"wire format: n={wire['n']}, {len(wire['linear'])} linear terms, "
      f"{len(wire['quadratic'])} pairs")

out = solve_remote(q, endpoint)
ref = solve_exhaustive(q)
print(f"remote bits:  {out.bits}")
print(f"local check:  {ref.bits}")
print(f"energy (locally re-evaluated): {out.energy:.6f} == {ref.energy:.6f}")
server.shutdown()
