import os
import shutil
import subprocess
import sys

import pytest

from ecm.cli import main

from conftest import DEMO

MODEL = str(DEMO / "portal.ecm")
CONTENT = str(DEMO / "content")


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- validate --------------------------------------------------------------------------------

def test_validate_demo(capsys):
    code, out, err = run_cli(capsys, "validate", MODEL)
    assert code == 0 and err == ""
    assert out == f"{MODEL}: 6 classes, 28 slots, 6 rules, 2 domains\n"


def test_validate_unknown_placeholder(capsys, tmp_path):
    bad = tmp_path / "bad.ecm"
    bad.write_text('class A { slot t: Text skeleton "{missing}" }\n')
    code, out, err = run_cli(capsys, "validate", str(bad))
    assert code == 1 and out == ""
    assert "unknown placeholder" in err and f"{bad}:1:" in err


def test_validate_missing_path(capsys, tmp_path):
    code, out, err = run_cli(capsys, "validate", str(tmp_path / "nope.ecm"))
    assert code == 2 and out == "" and "no such file" in err


def test_bad_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["render", "--model", MODEL])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


# -- render ------------------------------------------------------------------------------------

def test_render_demo_matches_golden(capsys, tmp_path):
    code, out, err = run_cli(capsys, "render", "--model", MODEL, "--content", CONTENT, "--out", str(tmp_path))
    assert code == 0 and out == "" and err == ""
    golden = DEMO / "golden" / "pages"
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(p.name for p in golden.iterdir())
    for p in golden.iterdir():
        assert (tmp_path / p.name).read_bytes() == p.read_bytes()


def test_render_anonymous_skips_gated_classes(capsys, tmp_path):
    code, out, err = run_cli(capsys, "render", "--model", MODEL, "--content", CONTENT, "--out",
                             str(tmp_path), "--context", str(DEMO / "contexts" / "anonymous.ctx"))
    assert code == 0 and out == ""
    skipped = [line for line in err.splitlines() if "skipped" in line]
    assert len(skipped) == 4
    assert all("requires" in line for line in skipped)
    assert not any(p.name.startswith(("admin", "section")) for p in tmp_path.iterdir())


def test_render_kiosk_suppresses_menu(capsys, tmp_path):
    code, _, err = run_cli(capsys, "render", "--model", MODEL, "--content", CONTENT, "--out",
                           str(tmp_path), "--context", str(DEMO / "contexts" / "administrator.ctx"))
    assert code == 0
    assert err.count("withheld by a personalization rule") == 3
    assert len(list(tmp_path.iterdir())) == 11


def test_render_partial_failure(capsys, tmp_path):
    content = tmp_path / "content"
    shutil.copytree(DEMO / "content", content)
    (content / "zz-bad.ecd").write_text('object bad : Section { name = "x"; maxItems = "many" }\n')
    (content / "aa-partial.ecd").write_text('object partial : MenuItem { label = "x" }\n')
    out_dir = tmp_path / "out"
    code, out, err = run_cli(capsys, "render", "--model", MODEL, "--content", str(content), "--out", str(out_dir))
    assert code == 1 and out == ""
    assert "zz-bad.ecd" in err and "TypeMismatch(maxItems" in err
    assert "aa-partial.ecd" in err and "target, position, visible" in err
    assert len(list(out_dir.iterdir())) == 14


def test_render_usage_errors(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "render", "--model", MODEL, "--content", str(tmp_path / "none"), "--out", str(tmp_path))
    assert code == 2
    code, _, _ = run_cli(capsys, "render", "--model", MODEL, "--content", CONTENT, "--out", str(tmp_path),
                         "--context", str(tmp_path / "none.ctx"))
    assert code == 2


# -- trace -------------------------------------------------------------------------------------

def test_trace_examples(capsys, tmp_path):
    p = tmp_path / "p.amc"
    p.write_text("x = 5; emit x\n")
    code, out, err = run_cli(capsys, "trace", "--program", str(p))
    assert code == 0 and err == "" and len(out.splitlines()) == 2

    p.write_text("emit y\n")
    code, out, err = run_cli(capsys, "trace", "--program", str(p))
    assert code == 1 and out == "UnboundIdentifier(y) at step 1\n"

    p.write_text("")
    code, out, err = run_cli(capsys, "trace", "--program", str(p))
    assert (code, out, err) == (0, "", "")


def test_trace_demo_matches_golden(capsys):
    prog = DEMO / "programs"
    code, out, err = run_cli(capsys, "trace", "--program", str(prog / "bind-news.amc"), "--input", str(prog / "bind-news.in"))
    assert code == 0 and err == ""
    assert out == (DEMO / "golden" / "bind-news.trace").read_text(encoding="utf-8")


def test_trace_parse_error(capsys, tmp_path):
    p = tmp_path / "p.amc"
    p.write_text("emit )\n")
    code, out, err = run_cli(capsys, "trace", "--program", str(p))
    assert code == 1 and out == "" and f"{p}:1:" in err


# -- schema ------------------------------------------------------------------------------------

def test_schema_demo(capsys, tmp_path):
    out_file = tmp_path / "s.sql"
    code, out, err = run_cli(capsys, "schema", "--model", MODEL, "--out", str(out_file))
    assert (code, out, err) == (0, "", "")
    assert out_file.read_bytes() == (DEMO / "golden" / "portal.sql").read_bytes()


def test_schema_fn_slot(capsys, tmp_path):
    m = tmp_path / "f.ecm"
    m.write_text('class F { slot handler: Fn(Int, Text) skeleton "" }\n')
    code, out, err = run_cli(capsys, "schema", "--model", str(m), "--out", str(tmp_path / "f.sql"))
    assert code == 1 and "class F, slot handler" in err
    assert not (tmp_path / "f.sql").exists()


def test_schema_unwritable_out(capsys, tmp_path):
    code, _, err = run_cli(capsys, "schema", "--model", MODEL, "--out", str(tmp_path / "missing" / "s.sql"))
    assert code == 2 and "cannot write" in err


# -- entry points --------------------------------------------------------------------------------

def test_module_entry_point(tmp_path):
    env = dict(os.environ, PYTHONIOENCODING="utf-8")
    proc = subprocess.run([sys.executable, "-m", "ecm", "validate", MODEL], capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and "6 classes" in proc.stdout
