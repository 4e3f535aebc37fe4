"""Import the compiled `hodsar` module and exercise a few calls.

Run from the repository root after `cargo build -p hodsar-python`
(or pass `--build` to do that first).
"""

import math
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def locate_library():
    for profile in ("release", "debug"):
        path = os.path.join(ROOT, "target", profile, "libhodsar.so")
        if os.path.exists(path):
            return path
    return None


def main():
    if "--build" in sys.argv or locate_library() is None:
        subprocess.run(["cargo", "build", "-p", "hodsar-python"], cwd=ROOT, check=True)
    lib = locate_library()
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, os.path.join(tmp, "hodsar.so"))
    sys.path.insert(0, tmp)
    import hodsar

    energies, labels, trans = hodsar.eigensystem(1400.0, 52.25)
    assert abs(trans["xy"] - 104.5) < 1e-9, trans
    print("eigensystem", labels, trans)

    pops = hodsar.steady_state(hodsar.TripletRates())
    assert abs(sum(pops) - 1.0) < 1e-9
    print("steady_state", pops)

    taus = [0.01 * i for i in range(301)]
    signal = hodsar.rabi_trace(2.0, taus, t2=5.0)
    fit = hodsar.fit_rabi(taus, signal)
    assert abs(fit["omega_r"] / 2.0 - 1.0) < 0.01, fit
    print("fit_rabi", fit)

    freqs = [104.0 + 0.0005 * i for i in range(3201)]
    rec = hodsar.synth_s21_modesum([(104.8, 8505.2, complex(0.6, 0.2))], freqs)
    rec = hodsar.parse_touchstone(rec.to_touchstone())
    f0, lo, hi = rec.find_modes()[0]
    q = rec.qcircle_fit(lo, hi)
    assert abs(q["q_loaded"] / 8505.2 - 1.0) < 0.02, q
    print("qcircle_fit", q)

    cfg = hodsar.load_config("seed = 3\n", None)
    assert cfg.seed == 3 and len(cfg.hash()) > 0
    est = cfg.estimate()
    assert 4e7 <= est["n_molecules"] <= 7.5e8, est
    print("estimate", est)

    code, out, _ = hodsar.run_cli(["eta"])
    assert code == 0 and "eta" in out
    print("run_cli", out.strip())

    try:
        hodsar.load_config("[zfs]\nq = 1\n", None)
    except ValueError as e:
        print("config error", e)
    else:
        raise AssertionError("unknown key accepted")

    assert math.isclose(hodsar.shot_noise_snr(0.01, 1e6, 1.0), 0.01 * 1e3)
    print("ok")


if __name__ == "__main__":
    main()
