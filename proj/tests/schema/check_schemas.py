"""Runs each emseg subcommand that emits JSON and validates the output against docs/schemas."""
import json
import pathlib
import struct
import subprocess
import sys
import tempfile

import jsonschema

CLI = sys.argv[1]
SCHEMAS = pathlib.Path(sys.argv[2])
CORPUS = pathlib.Path(sys.argv[3])


def schema(name):
    s = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(s)
    return s


def write_emvol(path, dims, values, f32):
    head = b"EMVOL1" + bytes([1 if f32 else 0]) + struct.pack("<3I", *dims) + struct.pack("<3f", 1.0, 1.0, 1.0)
    body = struct.pack(f"<{len(values)}f", *values) if f32 else bytes(values)
    path.write_bytes(head + body)
    return str(path)


def run(*args):
    r = subprocess.run([CLI, *args], capture_output=True, text=True)
    if r.returncode != 0:
        sys.exit(f"emseg {' '.join(args)} failed ({r.returncode}): {r.stderr}")
    return r.stdout


def check(name, text):
    jsonschema.validate(json.loads(text), schema(name))
    print(f"ok {name}")


with tempfile.TemporaryDirectory() as t:
    t = pathlib.Path(t)
    n = 24
    mask = [1 if (x - 11.5) ** 2 + (y - 11.5) ** 2 <= 49 else 0 for z in range(2) for y in range(n) for x in range(n)]
    prob = [0.9 * m + 0.05 * ((i * 7) % 3) for i, m in enumerate(mask)]
    gt = write_emvol(t / "gt.emvol", (n, n, 2), mask, False)
    pr = write_emvol(t / "p.emvol", (n, n, 2), prob, True)
    # an empty slice makes undefined scores show up as null
    empty = write_emvol(t / "e.emvol", (n, n, 1), [0] * n * n, False)

    check("iou_report", run("eval", "--pred", pr, "--gt", gt))
    check("iou_report", run("eval", "--pred", empty, "--gt", empty, "--unit", "slice"))
    check("extract", run("extract", "--in", pr, "--patch", "8x8", "--overlap", "half", "--out-dir", str(t / "half")))
    check("layout", (t / "half" / "layout.json").read_text())
    check("iou_report", run("eval", "--mode", "overlap50", "--pred", str(t / "half"), "--gt", gt))
    check("iou_report", run("eval", "--mode", "per_patch", "--pred", pr, "--gt", gt,
                            "--layout", str(t / "half" / "layout.json")))
    check("reconstruct", run("reconstruct", "--patches-dir", str(t / "half"), "--mode", "blend",
                             "--out", str(t / "b.emvol"), "--compare", pr))
    check("extract", run("extract", "--in", pr, "--gt", gt, "--patch", "8x8", "--n", "12", "--prob-fg", "0.9",
                         "--seed", "3", "--out-dir", str(t / "s")))
    check("samples", (t / "s" / "samples.json").read_text())
    check("perturbation", run("perturb-gt", "--gt", gt, "--radius", "1", "--footprint", "3d"))
    check("tta", run("tta", "--in", pr, "--cmd", "cp", "--dim", "3", "--out", str(t / "tta.emvol")))
    check("config", run("sample-config", "--space", str(CORPUS / "unet2d.sss"), "--seed", "1", "--format", "json"))
