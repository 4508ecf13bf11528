"""
Files and the command line
==========================

Everything above is also reachable as ``sdchash <command>``. Each command
prints one JSON document, so the steps chain cleanly in a shell script.
This demo drives the same entry point in-process inside a scratch folder.
"""

import json
import tempfile
from contextlib import redirect_stdout
from io import StringIO
from pathlib import Path

from sdchash.cli import main
from sdchash.dataio import read_codes, read_features


def run(*argv):
    buf = StringIO()
    with redirect_stdout(buf):
        status = main(list(argv))
    print(f"$ sdchash {' '.join(argv)}  -> exit {status}")
    return json.loads(buf.getvalue()) if status == 0 else None


with tempfile.TemporaryDirectory() as tmp:
    d = Path(tmp)
    run("gen-data", "--clusters", "4", "--per", "250", "--dim", "128", "--seed", "7", "--out", str(d / "f.sdcf"))
    fm = read_features(d / "f.sdcf")
    print(f"  {fm.n} rows x {fm.d} columns, labels {sorted(set(fm.labels.tolist()))}")

    doc = run("train", "--features", str(d / "f.sdcf"), "--bits", "16", "--epochs", "10", "--lr", "1e-3",
              "--lambda-cl", "0", "--out", str(d / "m.sdcm"))
    print(f"  final epoch loss {doc['epochs'][-1]['total']:.4f}; config saved next to the model:")
    print("  ", (d / "m.sdcm.json").read_text().replace("\n", " ")[:90], "...")

    run("encode", "--model", str(d / "m.sdcm"), "--features", str(d / "f.sdcf"), "--out", str(d / "c.sdcb"))
    print(f"  code file: {(d / 'c.sdcb').stat().st_size} bytes for {read_codes(d / 'c.sdcb').n} codes")

    doc = run("eval", "--codes", str(d / "c.sdcb"), "--features", str(d / "f.sdcf"), "--k", "100")
    print(f"  mAP@100 = {doc['map_at_k']:.3f} over {doc['n_query']} random queries")

    doc = run("analyze", "--codes", str(d / "c.sdcb"), "--features", str(d / "f.sdcf"))
    print(f"  histogram overlap {doc['intersection']:.3f}")

    # usage errors exit with 1, data errors with 2
    run("encode", "--model", str(d / "missing.sdcm"), "--features", str(d / "f.sdcf"), "--out", str(d / "x"))
