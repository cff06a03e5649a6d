import hashlib
import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from conftest import make_tgz
from pkgwatch.artifact import load_tarball
from pkgwatch.errors import IntegrityMismatch, MalformedDocument, NotFound, TransportError
from pkgwatch.registry import FixtureRegistry, HttpRegistry, open_registry
from pkgwatch.versioning import parse_iso8601

T0 = "2019-08-01T12:00:00.000Z"
T1 = "2019-08-01T12:00:00.001Z"


def test_fixture_document_two_versions(registry_builder):
    registry_builder.add_version("mgdb", "3.1.8", published=T0)
    registry_builder.add_version("mgdb", "3.1.9", published=T1)
    registry = FixtureRegistry(registry_builder.root)
    document = registry.fetch_document("mgdb")
    assert set(document.versions) == {"3.1.8", "3.1.9"}
    assert len(document.time) == 2
    assert document.time["3.1.9"] == pytest.approx(parse_iso8601(T1))


def test_fixture_unknown_package(registry_builder):
    registry = FixtureRegistry(registry_builder.root)
    with pytest.raises(NotFound):
        registry.fetch_document("ghost")
    with pytest.raises(NotFound):
        registry.fetch_tarball("ghost", "1.0.0")


def test_fixture_malformed_document(registry_builder):
    (registry_builder.root).mkdir(parents=True, exist_ok=True)
    (registry_builder.root / "bad.meta").write_text("{nope")
    with pytest.raises(MalformedDocument):
        FixtureRegistry(registry_builder.root).fetch_document("bad")


def test_fixture_tarball_loads(registry_builder):
    registry_builder.add_version("pkg", "1.0.0", published=T0,
                                 files={"index.js": "1"})
    registry = FixtureRegistry(registry_builder.root)
    artifact = load_tarball(registry.fetch_tarball("pkg", "1.0.0"))
    assert artifact.name == "pkg"


def test_fixture_integrity_mismatch(registry_builder):
    registry_builder.add_version("pkg", "1.0.0", published=T0,
                                 declared_shasum="0" * 40)
    with pytest.raises(IntegrityMismatch):
        FixtureRegistry(registry_builder.root).fetch_tarball("pkg", "1.0.0")


def test_fixture_scoped_package(registry_builder):
    registry_builder.add_version("@scope/pkg", "1.0.0", published=T0)
    registry = FixtureRegistry(registry_builder.root)
    document = registry.fetch_document("@scope/pkg")
    assert document.name == "@scope/pkg"
    assert registry.fetch_tarball("@scope/pkg", "1.0.0")


def test_list_new_versions_window(registry_builder):
    registry_builder.add_version("a", "1.0.0", published="2021-07-29T00:00:00Z")
    registry_builder.add_version("a", "1.0.1", published="2021-07-30T00:00:00Z")
    registry_builder.add_version("b", "0.1.0", published="2021-07-31T00:00:00Z")
    registry = FixtureRegistry(registry_builder.root)

    window = registry.list_new_versions(
        parse_iso8601("2021-07-30T00:00:00Z"), parse_iso8601("2021-08-01T00:00:00Z")
    )
    assert [(n, v) for n, v, _ in window] == [("a", "1.0.1"), ("b", "0.1.0")]

    empty = registry.list_new_versions(0.0, 1.0)
    assert empty == []

    with pytest.raises(ValueError):
        registry.list_new_versions(2.0, 1.0)


def test_fixture_mode_performs_no_network_io(registry_builder, monkeypatch):
    registry_builder.add_version("pkg", "1.0.0", published=T0)

    def explode(*args, **kwargs):
        raise AssertionError("network touched in fixture mode")

    monkeypatch.setattr(socket, "socket", explode)
    monkeypatch.setattr(socket, "create_connection", explode)

    registry = FixtureRegistry(registry_builder.root)
    registry.fetch_document("pkg")
    registry.fetch_tarball("pkg", "1.0.0")
    registry.list_new_versions(0.0, 1e12)


def test_open_registry_dispatch(registry_builder, tmp_path):
    registry_builder.add_version("pkg", "1.0.0", published=T0)
    assert isinstance(open_registry(str(registry_builder.root)), FixtureRegistry)
    assert isinstance(open_registry("https://registry.invalid"), HttpRegistry)
    with pytest.raises(ValueError):
        open_registry(str(tmp_path / "missing"))


# --- HTTP mode against a local server ---

class _Handler(BaseHTTPRequestHandler):
    documents: dict[str, dict] = {}
    tarballs: dict[str, bytes] = {}
    failures_left = 0
    requests_seen: list[str] = []

    def do_GET(self):
        _Handler.requests_seen.append(self.path)
        if _Handler.failures_left > 0:
            _Handler.failures_left -= 1
            self.send_response(503)
            self.end_headers()
            return
        path = self.path.lstrip("/")
        if path in self.tarballs:
            body = self.tarballs[path]
            self.send_response(200)
            self.end_headers()
            self.wfile.write(body)
        elif path in self.documents:
            body = json.dumps(self.documents[path]).encode()
            self.send_response(200)
            self.end_headers()
            self.wfile.write(body)
        else:
            self.send_response(404)
            self.end_headers()

    def log_message(self, *args):
        pass


@pytest.fixture
def http_registry():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_port}"

    tarball = make_tgz(name="web-pkg", version="1.0.0")
    _Handler.documents = {
        "web-pkg": {
            "name": "web-pkg",
            "versions": {
                "1.0.0": {
                    "name": "web-pkg", "version": "1.0.0",
                    "dist": {
                        "tarball": f"{base}/tarballs/web-pkg-1.0.0.tgz",
                        "shasum": hashlib.sha1(tarball).hexdigest(),
                    },
                },
            },
            "time": {"created": T0, "1.0.0": T0},
        },
        "@scope%2Fweb": {
            "name": "@scope/web", "versions": {"1.0.0": {}},
            "time": {"1.0.0": T0},
        },
    }
    _Handler.tarballs = {"tarballs/web-pkg-1.0.0.tgz": tarball}
    _Handler.failures_left = 0
    _Handler.requests_seen = []
    yield HttpRegistry(base, timeout=5, retries=3, backoff=0.01)
    server.shutdown()


def test_http_fetch_document(http_registry):
    document = http_registry.fetch_document("web-pkg")
    assert document.versions == ("1.0.0",)
    assert document.time["1.0.0"] == pytest.approx(parse_iso8601(T0))


def test_http_scoped_name_url_encoded(http_registry):
    document = http_registry.fetch_document("@scope/web")
    assert document.name == "@scope/web"
    assert any("%2F" in p for p in _Handler.requests_seen)


def test_http_not_found(http_registry):
    with pytest.raises(NotFound):
        http_registry.fetch_document("absent")


def test_http_retries_on_transient_failure(http_registry):
    _Handler.failures_left = 2
    document = http_registry.fetch_document("web-pkg")
    assert document.name == "web-pkg"


def test_http_transport_error_after_retries(http_registry):
    _Handler.failures_left = 99
    with pytest.raises(TransportError):
        http_registry.fetch_document("web-pkg")
    _Handler.failures_left = 0


def test_http_tarball_with_cache(http_registry, tmp_path):
    http_registry.cache_dir = tmp_path / "cache"
    data = http_registry.fetch_tarball("web-pkg", "1.0.0")
    assert load_tarball(data).name == "web-pkg"
    tarball_requests = [p for p in _Handler.requests_seen if "tarballs" in p]
    assert len(tarball_requests) == 1

    # Second fetch comes from the cache.
    http_registry.fetch_tarball("web-pkg", "1.0.0")
    tarball_requests = [p for p in _Handler.requests_seen if "tarballs" in p]
    assert len(tarball_requests) == 1


def test_http_unknown_version(http_registry):
    with pytest.raises(NotFound):
        http_registry.fetch_tarball("web-pkg", "9.9.9")


def test_http_list_new_versions_requires_names(http_registry):
    with pytest.raises(ValueError):
        http_registry.list_new_versions(0.0, 1e12)
    rows = http_registry.list_new_versions(0.0, 1e12, names=["web-pkg"])
    assert [(n, v) for n, v, _ in rows] == [("web-pkg", "1.0.0")]


def test_fixture_rejects_unsafe_names(registry_builder):
    registry = FixtureRegistry(registry_builder.root)
    for bad in ("../escape", "/abs/path", "a/../../b", ""):
        with pytest.raises(ValueError):
            registry.fetch_document(bad)
        with pytest.raises(ValueError):
            registry.fetch_tarball(bad, "1.0.0")
