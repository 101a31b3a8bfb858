"""Download the two benchmark datasets into $QKF_DATA_DIR (default ./data).

Tries the UCI repository first. When UCI is unreachable, magic04 is recovered
from the ``keel-ds`` wheel on PyPI, which ships the same comma-delimited file
as ``magic.dat``. There is no equivalent fallback for the white-wine file.
"""

from __future__ import annotations

import argparse
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

from qfeatures.datasets import DEFAULT_FILES, data_dir, load

UCI = {
    "wine-quality": "https://archive.ics.uci.edu/ml/machine-learning-databases/wine-quality/winequality-white.csv",
    "magic04": "https://archive.ics.uci.edu/ml/machine-learning-databases/magic/magic04.data",
}


def from_uci(name: str, dest: Path) -> bool:
    try:
        with urllib.request.urlopen(UCI[name], timeout=20) as resp:
            dest.write_bytes(resp.read())
        return True
    except OSError as exc:
        print(f"[{name}] UCI download failed: {exc}")
        return False


def magic_from_keel(dest: Path) -> bool:
    with tempfile.TemporaryDirectory() as tmp:
        cmd = [sys.executable, "-m", "pip", "download", "--no-deps", "-d", tmp, "keel-ds"]
        if subprocess.run(cmd, capture_output=True).returncode != 0:
            print("[magic04] pip download keel-ds failed")
            return False
        for wheel in Path(tmp).glob("*.whl"):
            with zipfile.ZipFile(wheel) as zf:
                hits = [n for n in zf.namelist() if n.endswith("/magic.dat")]
                if hits:
                    dest.write_bytes(zf.read(hits[0]))
                    return True
    print("[magic04] magic.dat not found in keel-ds")
    return False


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=None, help="target directory (default $QKF_DATA_DIR or ./data)")
    args = ap.parse_args(argv)
    out = args.out or data_dir()
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for name, fname in DEFAULT_FILES.items():
        dest = out / fname
        if dest.exists():
            print(f"[{name}] already present at {dest}")
            continue
        ok = from_uci(name, dest) or (name == "magic04" and magic_from_keel(dest))
        if not ok:
            dest.unlink(missing_ok=True)
            print(f"[{name}] unavailable; place {fname} in {out} by hand")
            status = 1
            continue
        table = load(name, dest)
        print(f"[{name}] {table.n_rows} rows, d={table.features.shape[1]} -> {dest}")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
