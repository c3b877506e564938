# Copyright 2026 The cogstream Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the cogstream command line.

Usage: cli_smoke.py CASE COGSTREAM_BINARY WORK_DIR FIXTURE_DIR

The "setup" case prepares the small dataset shared by the other cases.
"""

import filecmp
import json
import os
import re
import shutil
import subprocess
import sys

CASE, BIN, WORK, FIXTURES = sys.argv[1:5]
DATA = os.path.join(WORK, "data")


def run(*args, expect=0, timeout=300):
    proc = subprocess.run([BIN, *args], cwd=WORK, capture_output=True, text=True, timeout=timeout)
    if expect is not None and proc.returncode != expect:
        sys.exit(f"{' '.join(args)}: exit {proc.returncode}, expected {expect}\n"
                 f"stdout:\n{proc.stdout}\nstderr:\n{proc.stderr}")
    return proc


def check(cond, message):
    if not cond:
        sys.exit("FAILED: " + message)


def fresh(name):
    path = os.path.join(WORK, name)
    shutil.rmtree(path, ignore_errors=True)
    if os.path.exists(path):
        os.remove(path)
    return path


def mean_mbps(stdout):
    m = re.search(r"^throughput ([0-9.]+) ± ([0-9.]+) MB/s", stdout, re.M)
    check(m is not None, "no throughput line in:\n" + stdout)
    return float(m.group(1))


def setup():
    os.makedirs(WORK, exist_ok=True)
    shutil.rmtree(DATA, ignore_errors=True)
    run("prepare", "--out", DATA, "--scenes", "2", "--width", "1024", "--height", "1024",
        "--tile", "256")


def prepare_two_scenes():
    out = fresh("prep2048")
    run("prepare", "--out", out, "--scenes", "2", "--width", "2048", "--height", "2048")
    tifs = sorted(f for f in os.listdir(out) if f.endswith(".tif"))
    check(len(tifs) == 12, f"expected 12 files, got {tifs}")
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    check(sorted(manifest["files"]) == tifs, "manifest does not list exactly the files")


def prepare_rerun_identical():
    a, b = fresh("rerun_a"), fresh("rerun_b")
    for out in (a, b):
        run("prepare", "--out", out, "--scenes", "1", "--width", "512", "--height", "512",
            "--tile", "256", "--seed", "11")
    names = sorted(os.listdir(a))
    check(names == sorted(os.listdir(b)), "file sets differ")
    for n in names:
        check(filecmp.cmp(os.path.join(a, n), os.path.join(b, n), shallow=False), n + " differs")


def prepare_zero():
    out = fresh("prep0")
    run("prepare", "--out", out, "--scenes", "0")
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    check(manifest["files"] == [] and manifest["scenes"] == 0, "manifest not empty")


def bench_baseline_fixture():
    p = run("bench", "--config", os.path.join(FIXTURES, "baseline.cfg"), "--data", DATA,
            "--epochs", "2", "--patches", "32", "--batch-size", "8", "--log", "bench.jsonl")
    check("MB/s" in p.stdout, "no MB/s line")
    lines = open(os.path.join(WORK, "bench.jsonl")).read().splitlines()
    check(len(lines) >= 2, "trial log missing epochs")
    check(os.path.exists(os.path.join(WORK, "bench.jsonl.run.json")), "no run manifest")


def bench_invalid_patch():
    cfg = os.path.join(WORK, "bad_patch.cfg")
    with open(cfg, "w") as f:
        f.write("patch_size = 300\n")
    p = run("bench", "--config", cfg, "--data", DATA, expect=1)
    check("patch_size" in p.stderr and "{128,256,512,1024}" in p.stderr,
          "error does not name the key and domain: " + p.stderr)


def bench_latency_ordering():
    common = ["bench", "--data", DATA, "--epochs", "1", "--patches", "8", "--batch-size", "2",
              "--log", ""]
    fast = mean_mbps(run(*common, "--latency-ms", "0").stdout)
    slow = mean_mbps(run(*common, "--latency-ms", "164").stdout)
    check(fast > slow, f"latency 0 gave {fast} MB/s, latency 164 gave {slow} MB/s")


def bench_rerun_equal():
    timing = {"elapsed_s", "throughput_mbps", "decode_s"}
    logs = []
    for name in ("rerun1.jsonl", "rerun2.jsonl"):
        fresh(name)
        run("bench", "--data", DATA, "--epochs", "2", "--patches", "16", "--batch-size", "4",
            "--latency-ms", "1", "--seed", "5", "--log", name)
        logs.append([{k: v for k, v in json.loads(l).items() if k not in timing}
                     for l in open(os.path.join(WORK, name))])
    check(logs[0] == logs[1], "logged configs or request counts differ between reruns")


def tune_five():
    out = fresh("tune5.jsonl")
    run("tune", "--source", "model", "--data", DATA, "--trials", "5", "--out", out)
    lines = open(out).read().splitlines()
    check(len(lines) == 5, f"expected 5 study lines, got {len(lines)}")
    for l in lines:
        json.loads(l)


def grid_seven_by_four():
    out = fresh("grid.csv")
    run("grid", "--source", "model", "--data", DATA, "--x", "workers", "--y", "patch",
        "--reps", "5", "--out", out)
    rows = open(out).read().splitlines()
    check(rows[0].startswith("num_workers,patch_size,mean_mbps,std_mbps"), "bad header " + rows[0])
    check(len(rows) - 1 == 28, f"expected 28 rows, got {len(rows) - 1}")
    check(all(r.split(",")[4] == "5" for r in rows[1:]), "not 5 reps per cell")


def report_fixture():
    p = run("report", "--study", os.path.join(FIXTURES, "study_fixture.jsonl"),
            "--baseline-mbps", "20")
    check("| mean MB/s | std MB/s |" in p.stdout, "no mean/std columns")
    check("## Parameter importance" in p.stdout, "no importance section")
    rows = [l for l in p.stdout.splitlines() if re.match(r"^\| [1-5] \|", l)]
    check(len(rows) == 5, f"expected top-5 rows, got {len(rows)}")


def serve_remote_bench():
    serve = subprocess.Popen([BIN, "serve", "--root", DATA, "--port", "0", "--latency-ms", "5"],
                             cwd=WORK, stdout=subprocess.PIPE, text=True)
    try:
        line = serve.stdout.readline()
        m = re.search(r"(http://\S+)", line)
        check(m is not None, "serve printed no URL: " + line)
        p = run("bench", "--source", "remote", "--url", m.group(1), "--epochs", "1",
                "--patches", "16", "--batch-size", "4", "--log", "")
        check("MB/s" in p.stdout, "no MB/s line")
    finally:
        serve.send_signal(2)
        rc = serve.wait(timeout=30)
    check(rc == 0, f"serve exited {rc} on SIGINT")


def exit_codes():
    run("frobnicate", expect=1)
    run("bench", "--source", "nowhere", expect=1)
    run("bench", "--data", os.path.join(WORK, "missing"), expect=2)
    run("report", "--grid", os.path.join(FIXTURES, "baseline.cfg"), expect=1)


CASES = {f.__name__: f for f in (
    setup, prepare_two_scenes, prepare_rerun_identical, prepare_zero, bench_baseline_fixture,
    bench_invalid_patch, bench_latency_ordering, bench_rerun_equal, tune_five,
    grid_seven_by_four, report_fixture, serve_remote_bench, exit_codes)}

if __name__ == "__main__":
    os.makedirs(WORK, exist_ok=True)
    CASES[CASE]()
    print("ok", CASE)
