"""Deterministic .tgz builder: pack a directory npm-style (package/ prefix).

Used as a configurable pack command for rebuilds in environments without
a package manager, and by the test fixtures:

    python -m pkgwatch._packtool <directory> <output.tgz>

Entries are sorted, timestamps zeroed, and permissions fixed so identical
trees always produce identical archives.
"""

from __future__ import annotations

import gzip
import io
import sys
import tarfile
from pathlib import Path

EXCLUDED_DIRS = {".git", "node_modules"}


def build_tarball(
    files: dict[str, bytes], mtime: int = 0, order: list[str] | None = None
) -> bytes:
    """Serialize a {relative path: content} map into an npm-style .tgz."""
    paths = order if order is not None else sorted(files)
    buf = io.BytesIO()
    # mtime pinned in the gzip header too, not just the tar entries
    with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0) as gz:
        with tarfile.open(fileobj=gz, mode="w") as tar:
            for path in paths:
                content = files[path]
                info = tarfile.TarInfo(name=f"package/{path}")
                info.size = len(content)
                info.mtime = mtime
                info.mode = 0o644
                tar.addfile(info, io.BytesIO(content))
    return buf.getvalue()


def pack_directory(directory: str | Path, output: str | Path) -> Path:
    root = Path(directory)
    files: dict[str, bytes] = {}
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(root)
        if any(part in EXCLUDED_DIRS for part in rel.parts):
            continue
        if rel.suffix == ".tgz":
            continue
        files[rel.as_posix()] = path.read_bytes()
    out = Path(output)
    out.write_bytes(build_tarball(files))
    return out


def main(argv: list[str] | None = None) -> int:
    args = argv if argv is not None else sys.argv[1:]
    if len(args) != 2:
        print("usage: python -m pkgwatch._packtool <directory> <output.tgz>",
              file=sys.stderr)
        return 2
    pack_directory(args[0], args[1])
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
