"""Run every command shown in the README's console blocks.

A ``$ mlexpand ...`` line must exit 0, and each output line shown under it
must appear verbatim in what the command prints.
"""
import re
import shlex
import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]


def console_examples():
    text = (ROOT / "README.md").read_text()
    out = []
    for block in re.findall(r"```console\n(.*?)```", text, flags=re.S):
        for line in block.splitlines():
            if line.startswith("$ "):
                out.append((line[2:], []))
            elif line.strip():
                out[-1][1].append(line)
    return out


EXAMPLES = console_examples()


def test_readme_has_examples():
    assert len(EXAMPLES) >= 8


@pytest.mark.parametrize("cmd,shown", EXAMPLES, ids=[c for c, _ in EXAMPLES])
def test_readme_command(cmd, shown, tmp_path):
    argv = shlex.split(cmd)
    assert argv[0] == "mlexpand"
    env = {"MLEXPAND_OUTPUT_DIR": str(tmp_path), "PATH": "/usr/bin:/bin"}
    res = subprocess.run([sys.executable, "-m", "mlexpand", *argv[1:]], cwd=ROOT,
                         capture_output=True, text=True, env=env, timeout=300)
    assert res.returncode == 0, res.stderr
    printed = res.stdout.splitlines()
    for line in shown:
        assert line in printed, f"README shows {line!r}"
