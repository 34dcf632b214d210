#!/usr/bin/env python3
"""Test double for the runner shim.

Implements the command-line and JSON contract the sandbox and the CodeBLEU
analysis path consume:

  runner_stub.py --mode {plot|table|analyze} --script PATH [--out DIR]

Prints exactly one JSON object on stdout and exits 0 unless the stub itself
is broken.
"""
import argparse
import ast
import hashlib
import io
import json
import os
import sys
import traceback

SCHEMA_VERSION = 1


def emit(obj, real_stdout):
    real_stdout.write(json.dumps(obj, sort_keys=True) + "\n")
    real_stdout.flush()


def versions():
    out = {"python": sys.version.split()[0]}
    try:
        import matplotlib
        out["matplotlib"] = matplotlib.__version__
    except Exception:  # noqa: BLE001
        pass
    return out


def run(mode, script_path, out_dir, real_stdout):
    report = {"schema_version": SCHEMA_VERSION, "ok": False, "phase": "compile",
              "exception_type": None, "traceback_tail": "", "figures": [], "csvs": [],
              "library_versions": {}}
    source = open(script_path, encoding="utf-8").read()
    try:
        code = compile(source, script_path, "exec")
    except SyntaxError as exc:
        report["exception_type"] = type(exc).__name__
        report["traceback_tail"] = "".join(traceback.format_exception_only(type(exc), exc))[-2048:]
        sys.stderr.write(report["traceback_tail"])
        emit(report, real_stdout)
        return

    report["phase"] = "exec"
    fig_dir = os.path.join(out_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    report["library_versions"] = versions()

    # Redirect savefig into the figures directory so every artifact lands there.
    original_savefig = plt.Figure.savefig
    counter = {"n": 0}

    def savefig(fig, fname=None, *args, **kwargs):
        counter["n"] += 1
        name = "figure_%d.png" % counter["n"]
        kwargs.pop("format", None)
        return original_savefig(fig, os.path.join(fig_dir, name), format="png", **kwargs)

    plt.Figure.savefig = savefig
    plt.show = lambda *a, **k: None
    try:
        exec(code, {"__name__": "__main__", "__file__": script_path})
        report["ok"] = True
        report["exception_type"] = None
    except BaseException as exc:  # noqa: BLE001
        report["exception_type"] = type(exc).__name__
        tail = traceback.format_exc()[-2048:]
        report["traceback_tail"] = tail
        sys.stderr.write(tail)
    if mode == "plot" and report["ok"] and counter["n"] == 0:
        for num in plt.get_fignums():
            plt.figure(num).savefig("forced")
    plt.close("all")
    report["figures"] = sorted(f for f in os.listdir(fig_dir) if f.endswith(".png"))
    report["csvs"] = sorted(f for f in os.listdir(out_dir) if f.endswith(".csv"))
    if not report["ok"]:
        report["ok"] = False
    emit(report, real_stdout)


class Facts(ast.NodeVisitor):
    """Subtree shapes plus def-use edges over alpha-renamed variables."""

    def __init__(self):
        self.hashes = []
        self.edges = []
        self.names = {}

    def var(self, name):
        if name not in self.names:
            self.names[name] = "v%d" % len(self.names)
        return self.names[name]

    def generic_visit(self, node):
        kids = [type(c).__name__ for c in ast.iter_child_nodes(node)]
        shape = type(node).__name__ + "(" + ",".join(kids) + ")"
        self.hashes.append(hashlib.sha1(shape.encode()).hexdigest()[:16])
        super().generic_visit(node)

    def visit_Assign(self, node):
        self.record(node.targets, node.value)
        self.generic_visit(node)

    def visit_AugAssign(self, node):
        self.record([node.target], node.value)
        self.generic_visit(node)

    def record(self, targets, value):
        used = [n.id for n in ast.walk(value) if isinstance(n, ast.Name) and isinstance(n.ctx, ast.Load)]
        for t in targets:
            for d in ast.walk(t):
                if isinstance(d, ast.Name):
                    for u in used:
                        self.edges.append([self.var(u), self.var(d.id), "comesFrom"])

    def visit_Name(self, node):
        self.var(node.id)
        self.generic_visit(node)


def analyze(script_path, real_stdout):
    source = open(script_path, encoding="utf-8").read()
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        emit({"schema_version": SCHEMA_VERSION, "ok": False, "phase": "compile",
              "exception_type": type(exc).__name__, "subtree_hashes": [], "dataflow_edges": []},
             real_stdout)
        return
    facts = Facts()
    # Visit statements in order so variable ids follow first appearance.
    for stmt in tree.body:
        facts.visit(stmt)
    emit({"schema_version": SCHEMA_VERSION, "ok": True, "phase": "analyze",
          "subtree_hashes": sorted(facts.hashes), "dataflow_edges": sorted(facts.edges)},
         real_stdout)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--mode", choices=["plot", "table", "analyze"], required=True)
    parser.add_argument("--script", required=True)
    parser.add_argument("--out", default=".")
    args = parser.parse_args()
    real_stdout = sys.stdout
    sys.stdout = sys.stderr
    if args.mode == "analyze":
        analyze(args.script, real_stdout)
    else:
        run(args.mode, args.script, args.out, real_stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
