"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--devices 100 1000 10000] [--events 2000]

Times the restoration sweep, the full scoring sweep, and an end-to-end replay
(one sweep per event) for each available backend.
"""

from __future__ import annotations

import argparse
import random
import sys
import timeit
from array import array
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import streams  # noqa: E402
from iottrust import _kernels_py, kernels  # noqa: E402
from iottrust.engine import Engine, build_scenario  # noqa: E402


def backends():
    found = {"python": _kernels_py}
    try:
        from iottrust import _kernels
    except ImportError:
        pass
    else:
        found["compiled"] = _kernels
    return found


def best(fn, repeat=5, number=None):
    timer = timeit.Timer(fn)
    if number is None:
        number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--devices", type=int, nargs="+", default=[100, 1000, 10000])
    parser.add_argument("--events", type=int, default=2000)
    args = parser.parse_args(argv)

    impls = backends()
    if "compiled" not in impls:
        print("compiled extension not built; only the Python backend is timed")
    print(f"{'devices':>8} {'kernel':<10} " + " ".join(f"{name:>14}" for name in impls)
          + ("   speedup" if len(impls) == 2 else ""))

    for n in args.devices:
        rng = random.Random(n)
        scen = streams.scenario(rng, n_devices=n, n_users=8)
        # sparse topology keeps scenario generation fast at large n
        scen["topology"] = [[f"d{i}", f"d{(i * 7 + 3) % n}"] for i in range(n) if (i * 7 + 3) % n != i]
        engine = Engine(build_scenario(scen))
        st = engine.state
        c, m = array("d", st.bbt_c), array("d", st.bbt_n)

        rows = {
            "restore": {k: best(lambda i=i: kernels.restore_all(c, m, 1e-3, 2e-3, 0.5, impl=i))
                        for k, i in impls.items()},
            "score": {k: best(lambda i=i: kernels.score_all(st, impl=i))
                      for k, i in impls.items()},
        }
        events = streams.events(rng, scen, args.events)
        replay = {}
        for k, i in impls.items():
            def run(i=i):
                kernels._impl = i
                Engine(build_scenario(scen)).replay(events)
            replay[k] = best(run, repeat=3, number=1)
        rows[f"replay/{args.events}"] = replay

        for label, times in rows.items():
            cells = " ".join(f"{times[k] * 1e6:>12.1f}us" for k in impls)
            speed = (f"   {times['python'] / times['compiled']:7.1f}x"
                     if "compiled" in times else "")
            print(f"{n:>8} {label:<10} {cells}{speed}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
