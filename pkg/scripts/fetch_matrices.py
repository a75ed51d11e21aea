#!/usr/bin/env python3
"""Download the benchmark matrices used by the acceptance tests.

Fetches Matrix Market files from the SuiteSparse Matrix Collection and
extracts each <name>.mtx into the target directory (default <repo>/matrices,
or the first command-line argument).  Needs outbound network access; run it
on a networked machine and copy the directory over if the test host is
offline, then point ICIR_MATRIX_DIR at it if it is not <repo>/matrices.
"""

import io
import sys
import tarfile
import urllib.request
from pathlib import Path

BASE = "https://suitesparse-collection-website.herokuapp.com/MM"

MATRICES = [
    ("HB", "bcsstk27"),
    ("Nasa", "nasa2146"),
    ("GHS_psdef", "wathen120"),
    ("Boeing", "msc01050"),
    ("HB", "bcsstk11"),
    ("GHS_psdef", "apache1"),
]


def fetch(group: str, name: str, dest: Path) -> None:
    target = dest / f"{name}.mtx"
    if target.exists():
        print(f"{name}: already present")
        return
    url = f"{BASE}/{group}/{name}.tar.gz"
    print(f"{name}: downloading {url}")
    with urllib.request.urlopen(url) as resp:
        payload = resp.read()
    with tarfile.open(fileobj=io.BytesIO(payload), mode="r:gz") as tar:
        member = next(m for m in tar.getmembers()
                      if m.name.endswith(f"{name}.mtx"))
        with tar.extractfile(member) as fh:
            target.write_bytes(fh.read())
    print(f"{name}: wrote {target}")


def main() -> int:
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else \
        Path(__file__).resolve().parent.parent / "matrices"
    dest.mkdir(parents=True, exist_ok=True)
    failures = 0
    for group, name in MATRICES:
        try:
            fetch(group, name, dest)
        except Exception as exc:  # keep going; report at the end
            print(f"{name}: FAILED ({exc})", file=sys.stderr)
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
