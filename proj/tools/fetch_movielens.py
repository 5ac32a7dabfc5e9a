#!/usr/bin/env python3
"""Extract the MovieLens-100k ratings file (u.data layout) into data/ml-100k/.

The ratings are taken from the copy bundled inside the RecBole wheel, so only
a Python package index is needed. The file is not committed: MovieLens terms
do not allow redistribution.
"""
import argparse
import pathlib
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[1] / "data" / "ml-100k"))
    args = parser.parse_args()
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / "u.data"
    if target.exists():
        print(f"{target} already present")
        return 0
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "recbole==1.2.1", "-d", tmp],
                       check=True, stdout=subprocess.DEVNULL)
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        lines = zipfile.ZipFile(wheel).read(MEMBER).decode().splitlines()
    # First line is a typed header (user_id:token ...); the rest is u.data verbatim.
    rows = [line for line in lines[1:] if line.strip()]
    target.write_text("\n".join(rows) + "\n")
    print(f"wrote {len(rows)} ratings to {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
