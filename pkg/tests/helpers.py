"""Test helpers shared by several modules."""

from pathlib import Path

from ppglucose.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def chain(root, n=16, seed=2, config=None):
    """synth -> extract -> preprocess -> features -> train -> predict -> sweep -> evaluate."""
    root = Path(root)
    extra = ["--config", config] if config else []
    steps = [
        ["synth", "--n", n, "--seed", seed, "--out-dir", root / "synth"],
        ["extract", root / "synth" / "frames", "--out-dir", root / "signals"],
        ["preprocess", root / "signals", "--out-dir", root / "pre"],
        ["features", root / "pre", "--labels", root / "synth" / "trials.csv", "-o", root / "features.csv"],
        ["train", root / "features.csv", "--seed", seed, "-o", root / "model.json", "--k", 5],
        ["predict", root / "features.csv", "--model", root / "model.json", "--seed", seed, "-o", root / "pred.csv"],
        ["sweep", root / "features.csv", "--seed", seed, "--k-max", 6, "-o", root / "sweep.csv"],
        ["evaluate", root / "pred.csv", "--sweep", f"stats={root / 'sweep.csv'}", "--out-dir", root / "eval"],
    ]
    for step in steps:
        code = run(*extra, *step)
        if code != 0:
            raise AssertionError(f"step {step[0]} exited with {code}")
    return root


def files_under(root):
    """Relative path -> bytes for every file below ``root``."""
    return {p.relative_to(root): p.read_bytes() for p in sorted(Path(root).rglob("*")) if p.is_file()}
