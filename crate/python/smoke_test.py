"""Builds the pysolc extension and exercises its public API.

Usage: python3 python/smoke_test.py [--no-build]
"""

import argparse
import importlib.util
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build() -> pathlib.Path:
    subprocess.run(
        ["cargo", "build", "-p", "solc-py", "--release", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libpysolc.so"
    if not lib.exists():
        sys.exit(f"missing {lib}")
    return lib


def load(lib: pathlib.Path):
    tmp = pathlib.Path(tempfile.mkdtemp())
    dest = tmp / "pysolc.so"
    shutil.copy(lib, dest)
    spec = importlib.util.spec_from_file_location("pysolc", dest)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--no-build", action="store_true")
    args = ap.parse_args()
    lib = ROOT / "target" / "release" / "libpysolc.so" if args.no_build else build()
    solc = load(lib)
    print("pysolc", solc.__version__)

    assert abs(solc.smoothstep(1, 0.5) - 0.5) < 1e-12
    f, df = solc.f_dcg(0.0)
    assert f == 0.0 and df == -400.0

    default = solc.Params()
    assert default.get("R_off") == 1.0
    assert any("k_s" in w for w in default.validate())
    calibrated = solc.Params.load(str(ROOT / "params" / "calibrated.params"))
    assert calibrated.get("g_leak") == 3.0
    assert calibrated.with_value("g_leak", 2.0).get("g_leak") == 2.0
    try:
        solc.Params("i_max=500")
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("invalid parameters accepted")

    net = solc.compile_factor(35, 6)
    report = net.report()
    print("factor 35 at 6 bits:", report)
    assert report["total"] == net.n_gates
    errors, _ = net.validate()
    assert not errors
    again = solc.Netlist.from_text(net.to_text())
    assert again.to_text() == net.to_text()
    assert [name for name, _ in net.readout()] == ["p", "q"]

    sys_ = solc.System(solc.compile_adder(2, 5), calibrated)
    nv, nm, nd = sys_.layout
    assert sys_.dim == nv + nm + 2 * nd
    y = sys_.initial_state(0)
    dy = sys_.rhs(0.1, y)
    jac = sys_.jacobian(0.1, y)
    assert len(dy) == sys_.dim and len(jac) == sys_.dim
    run = sys_.integrate(seed=1, t_max=0.5)
    print("adder run:", run["outcome"], "t_end", run["t_end"])

    gates = solc.check_gates()
    assert len(gates) == 24
    print("consistent zero-current:", sum(g["passed"] for g in gates if g["consistent"]), "/ 12")

    out = solc.factor(15, bits=4, params=calibrated, t_max=40.0, retries=3)
    print("factor 15:", out["status"], out["answer"])
    assert out["status"] == "solved"
    ans = out["answer"]["factors"]
    assert ans["p"] * ans["q"] == 15

    est = solc.subset_sum([3, 5, 6], 11, t_max=0.05, trials=2)
    assert est["trials"] == 2
    print("smoke test passed")


if __name__ == "__main__":
    main()
