#!/usr/bin/env python
import subprocess
from pathlib import Path

from setuptools import setup
from setuptools.command.sdist import sdist as sdist_orig

ROOT = Path(__file__).parent
VERSION = ROOT / "VERSION"


def main():
    return setup(
        cmdclass={
            "sdist": sdist,
        },
        version=project_version(),
    )


def git_version():
    try:
        output = (
            subprocess.check_output(
                ["git", "describe", "--tags", "--always"],
                cwd=ROOT,
                stderr=subprocess.DEVNULL,
            )
            .strip()
            .decode()
        )
    except (FileNotFoundError, subprocess.CalledProcessError):
        # No tags yet, or no git at all (e.g. building from an sdist).
        return None
    try:
        base, distance, commit_hash = output.split("-")
    except ValueError:
        # A release tag, or a bare hash in a repo without tags.
        return output if output[:1].isdigit() else None
    # PEP 440 local version
    return "{}.{}+{}".format(base, distance, commit_hash)


def project_version():
    version = git_version()
    if not version and VERSION.exists():
        version = VERSION.read_text().strip()
    if not version:
        raise RuntimeError("cannot detect project version")
    return version


class sdist(sdist_orig):
    def run(self):
        # The sdist carries no git metadata: freeze the version into it.
        VERSION.write_text(project_version() + "\n")
        sdist_orig.run(self)


if __name__ == "__main__":
    main()
