"""Smoke test for the sbnet_py extension.

Build with `cargo build -p sbnet-py --features extension-module --release`
and copy target/release/libsbnet_py.so to sbnet_py.so next to this file, or
install with maturin.
"""
import json
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import sbnet_py as sb


def main():
    assert sb.dec([0, 1]) == 2
    assert sb.bin(2, 2) == [0, 1]
    assert sb.sharing_code(2) == [[1, 0], [1, 1], [0, 1], [0, 0]]

    eps = 1e-3
    target = sb.Kernel.random(2, 2, 7).clamp(eps)
    net = sb.build_deep(target, 2, eps, schedule="overlaid")
    assert net.hidden_widths == [8, 8], net.hidden_widths
    err = net.kernel().max_abs_error(target)
    assert err <= sb.error_bound(eps, net.unit_count), err

    back = sb.Network.from_json(net.to_json())
    assert back.params() == net.params()

    counts = net.sample([1, 0], 5000, seed=3)
    assert sum(counts) == 5000 and len(counts) == 4

    shallow = sb.build_shallow_trainable(target, eps)
    assert shallow.kernel().max_abs_error(target) < 0.02

    plan = sb.plan(2, 2, 2)
    assert plan["unit_count"] == 18 and plan["trainable_params"] == 12
    report = sb.validate_arch(1, 4, [5, 3])
    assert not report["passed"]

    rows = sb.table8(trials=20, eps=[0.025], seed=1)
    assert rows[0]["e_max"] <= rows[0]["bound"]

    try:
        sb.build_deep(target, 3, eps)
    except ValueError:
        pass
    else:
        raise AssertionError("j > d should raise")

    print(json.dumps({"ok": True, "deep_error": err, "table8": rows[0]["e_avg"]}))


if __name__ == "__main__":
    main()
