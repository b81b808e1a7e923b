"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeats 5]

Each row times one kernel (or one end-to-end simulation that is dominated by
it) on both backends and checks that the two produce identical output.
"""

import argparse
import time

import numpy as np

from fanout_dqst import kernels
from fanout_dqst.qcore import BitVector, random_density_matrix
from fanout_dqst.rng import make_rng
from fanout_dqst.simkernel import NoiseModel, Setting, joint_state, trajectory_ghz_counts


def best_of(fn, repeats):
    times = []
    out = None
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def frame_case(n=20, fold=5, shots=200_000, events_per_shot=3.0, seed=0):
    rng = make_rng(seed)
    targets = np.tile(np.arange(n, 0, -1), fold)
    num = int(shots * events_per_shot)
    ev_shot = rng.integers(0, shots, num)
    ev_slot = rng.integers(-1, len(targets), num)
    ev_x = rng.integers(0, 1 << (n + 1), num).astype(np.uint64)
    ev_z = rng.integers(0, 1 << (n + 1), num).astype(np.uint64)
    return lambda b: kernels.propagate_frames(targets, 0, shots, ev_shot, ev_slot, ev_x, ev_z, backend=b)


def depol_case(num_qubits=9, seed=0):
    rho = random_density_matrix(num_qubits, make_rng(seed)).mat.copy()
    return lambda b: kernels.pair_depolarize(rho, 0, 3, 0.01, backend=b)


def trajectory_case(n=20, shots=100_000):
    noise = NoiseModel(two_qubit_depol=0.01, readout_flip=(0.02, 0.02))
    return lambda b: trajectory_ghz_counts(n, noise, 3, shots, seed=1, backend=b).to_array()


def dense_case(n=6):
    rho = random_density_matrix(n, make_rng(2))
    noise = NoiseModel(two_qubit_depol=0.01)
    k = BitVector.ones(n)
    return lambda b: joint_state(rho, k, noise, fold=3, backend=b).mat


CASES = {
    "propagate_frames (n=20, 5 folds, 2e5 shots)": frame_case,
    "pair_depolarize (9 qubits)": depol_case,
    "trajectory GHZ n=20, fold 3, 1e5 shots": trajectory_case,
    "dense joint state n=6, fold 3": dense_case,
}


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    if kernels.BACKEND != "cython":
        print("compiled kernels not built; only the numpy fallback is available")
        backends = ["python"]
    else:
        backends = ["python", "cython"]
    print(f"{'case':48s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup  identical")
    for name, make in CASES.items():
        fn = make()
        res = {b: best_of(lambda: fn(b), args.repeats) for b in backends}
        cols = " ".join(f"{res[b][0] * 1e3:8.1f}ms" for b in backends)
        if len(backends) == 2:
            speed = res["python"][0] / res["cython"][0]
            same = _same(res["python"][1], res["cython"][1])
            print(f"{name:48s} {cols}  {speed:7.1f}x  {same}")
        else:
            print(f"{name:48s} {cols}")


if __name__ == "__main__":
    main()
