"""Writes the example problem files in fixtures/ (deterministic)."""

import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def enc(m):
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def grid(n):
    return [i / n for i in range(n + 1)]


def thetas(n):
    return [2 * math.pi * j / n for j in range(n)]


def scalar(dim):
    return {"kind": "scalar", "dim": dim}


def loop(dim, n):
    return {"kind": "loop", "dim": dim, "theta_samples": n}


def problem(blocks, task, payload, rank=1, config=None):
    p = {"version": "1", "algebra": {"blocks": blocks}, "rank": rank, "task": task, "payload": payload}
    if config:
        p["config"] = config
    return p


def odd(w):
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    k = w.shape[0]
    d = np.zeros((2 * k, 2 * k), dtype=complex)
    d[k:, :k] = w
    d[:k, k:] = w.conj().T
    return d


def lag_projection(u):
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    k = u.shape[0]
    return 0.5 * np.block([[np.eye(k), u.conj().T], [u, np.eye(k)]])


def random_projection(rng, n, rank):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    v = q[:, :rank]
    return v @ v.conj().T


def divergence(d, intervals=16):
    def f(n, t):
        a, b = 0.5 - 2.0 / n, 0.5
        if t <= a:
            return -1.0
        if t >= b:
            return 1.0
        return -1.0 + 2.0 * (t - a) / (b - a)

    ts = grid(intervals)
    samples = [[enc(np.diag([f(n, t) for n in range(4, d + 4)]))] for t in ts]
    return problem([scalar(d)], "spectral-flow", {"path": {"t": ts, "samples": samples}})


def main():
    rng = np.random.default_rng(7)
    files = {}

    p = random_projection(rng, 3, 2)
    ts = grid(32)
    files["axiom_v"] = problem(
        [scalar(3)], "spectral-flow", {"path": {"t": ts, "samples": [[enc(2 * t * p - np.eye(3))] for t in ts]}}
    )
    files["validate_axiom_v"] = dict(files["axiom_v"], task="validate")

    ts = grid(4)
    files["constant_path"] = problem(
        [scalar(2), scalar(1)],
        "spectral-flow",
        {"path": {"t": ts, "samples": [[enc(np.diag([1.0, -2.0])), enc([[0.5]])] for _ in ts]}},
    )

    for d in (8, 16, 32):
        files[f"divergence_d{d}"] = divergence(d)

    ts = grid(32)
    th = thetas(16)

    def rot(a):
        return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])

    files["loop_flow"] = problem(
        [loop(2, 16)],
        "spectral-flow",
        {"path": {"t": ts, "samples": [[[enc(rot(a) @ np.diag([2 * t - 1, 1.0]) @ rot(a).T) for a in th]] for t in ts]}},
    )

    q = random_projection(rng, 4, 1)
    files["relative_index"] = problem(
        [scalar(4)], "relative-index", {"p": [enc(random_projection(rng, 4, 3))], "q": [enc(q)]}
    )

    ts = grid(32)
    files["maslov_scalar"] = problem(
        [scalar(1)],
        "maslov",
        {
            "t": ts,
            "u0": [[enc([[1.0]])] for _ in ts],
            "u1": [[enc([[np.exp(1j * (math.pi + 2 * math.pi * t))]])] for t in ts],
        },
    )

    files["maslov_triple"] = problem(
        [scalar(1)], "maslov-triple", {"u0": [enc([[1.0]])], "u1": [enc([[-1.0]])], "u2": [enc([[1j]])]}
    )

    ts = grid(8)
    odd_path = {"t": ts, "samples": [[[enc(odd([[(1 - t) + t * np.exp(1j * a)]])) for a in th]] for t in ts]}
    files["odd_flow"] = problem([loop(1, 16)], "odd-spectral-flow", {"path": odd_path}, rank=2)

    files["odd_relative_index"] = problem(
        [loop(1, 16)],
        "odd-relative-index",
        {"p": [[enc(lag_projection([[np.exp(1j * a)]])) for a in th]], "q": [[enc(lag_projection([[1.0]])) for _ in th]]},
        rank=2,
    )

    ts = grid(32)
    files["suspend_even_to_odd"] = problem(
        [scalar(2)],
        "suspend-check",
        {"kind": "even-to-odd", "path": {"t": ts, "samples": [[enc(np.diag([2 * t - 1, 0.5]))] for t in ts]}},
        config={"x_samples": 32},
    )
    files["suspend_odd_to_even"] = problem([loop(1, 16)], "suspend-check", {"kind": "odd-to-even", "path": odd_path}, rank=2)

    def involution(a):
        v = np.array([math.cos(a), math.sin(a)])
        return 0.98 * (2 * np.outer(v, v) - np.eye(2))

    files["suspend_bounded"] = problem(
        [loop(2, 16)], "suspend-check", {"kind": "bounded", "f": [[enc(involution(a)) for a in th]]}, config={"t_samples": 32}
    )

    u0 = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    u1 = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    files["oracle_interval"] = problem([scalar(2)], "oracle-interval", {"u0": enc(u0), "u1": enc(u1)})

    files["axiom_suite"] = problem([scalar(2), loop(1, 8)], "axiom-suite", {}, config={"trials": 4})

    OUT.mkdir(exist_ok=True)
    for name, body in files.items():
        (OUT / f"{name}.json").write_text(json.dumps(body, indent=1) + "\n")


if __name__ == "__main__":
    main()
