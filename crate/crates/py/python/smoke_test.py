"""Smoke test for the authcred_py extension.

Build and install with `maturin develop` from crates/py, or point
AUTHCRED_PY_DIR at a directory holding a built authcred_py module, then run
`python crates/py/python/smoke_test.py` (or under pytest).
"""

import hashlib
import json
import os
import sys

if os.environ.get("AUTHCRED_PY_DIR"):
    sys.path.insert(0, os.environ["AUTHCRED_PY_DIR"])

import authcred_py as ac


def test_keys_and_signatures():
    kp = ac.KeyPair(b"\x01" * 32)
    assert kp.did == ac.did_for_key(kp.public_key)
    assert kp.did.startswith("did:")
    sig = kp.sign(b"hello")
    assert ac.verify(kp.public_key, b"hello", sig)
    assert not ac.verify(kp.public_key, b"hellp", sig)
    assert ac.KeyPair(b"\x01" * 32).public_key == kp.public_key


def test_canonical_json_and_tagged_hash():
    assert ac.canonical_json({"b": 1, "a": [True, None]}) == b'{"a":[true,null],"b":1}'
    assert ac.tagged_hash("t", [b"x", b"y"]) == hashlib.sha256(b"txy").digest()


def test_coi_intersection():
    journal = ["Uppsala University", "KTH", "ETH Zurich"]
    assert ac.coi_intersection(journal, ["  kth ", "MIT"]) == 1
    assert ac.coi_intersection(journal, []) == 0


def test_demo_publication_and_chain():
    node, outcome = ac.Node.demo(42)
    assert outcome["final_state"] == "Published"
    assert outcome["report"]["passed"]
    _, again = ac.Node.demo(42)
    assert again["head"] == outcome["head"]

    doc = node.publication_document(outcome["submission_id"])
    report = ac.verify_publication(node.headers(), doc)
    assert report["passed"]
    tampered = bytearray(doc)
    tampered[len(tampered) // 2] ^= 0x01
    try:
        bad = ac.verify_publication(node.headers(), bytes(tampered))
        assert not bad["passed"]
    except ac.AuthcredError:
        pass
    assert node.audit()["valid"]


def test_credentials_and_persisted_ledger():
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        node = ac.Node(seed=7, data_dir=d)
        issuer = node.create_identity()["did"]
        holder = node.create_identity()["did"]
        issued = node.issue_credential(issuer, holder, [("affiliation", "KTH")])
        vc = issued["credential"]
        assert node.verify_credential(vc)["passed"]
        vc["subject_did"] = issuer
        assert not node.verify_credential(vc)["passed"]
        try:
            node.resolve_did("did:authcred:nobody")
            raise AssertionError("expected an error")
        except ac.AuthcredError as e:
            assert "NotFound" in str(e) or "Invalid" in str(e)

        head = node.head()
        del node
        with open(os.path.join(d, "registry", "ledger.bin"), "rb") as f:
            data = f.read()
        report = ac.verify_chain(data)
        assert report["valid"] and report["blocks_checked"] == head["index"] + 1
        corrupt = bytearray(data)
        corrupt[-5] ^= 0xFF
        assert not ac.verify_chain(bytes(corrupt))["valid"]
        json.dumps(report)


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok  {name}")
