import json

from loopss.cli import main


def test_run_writes_report_with_transported_image(pair2_file, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["run", str(pair2_file), "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert "3*u*x^2" in text
    report = json.loads(text)
    assert report["collapse"]["page"] == 4


def test_run_to_stdout(path2_file, capsys):
    code = main(["run", str(path2_file)])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["complete"] is True
    assert payload["audit"]["discrepancies"] == []


def test_run_is_byte_deterministic(pair2_file, tmp_path):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", str(pair2_file), "--out", str(out1)]) == 0
    assert main(["run", str(pair2_file), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_run_malformed_monomial_exits_2(malformed_file, capsys):
    code = main(["run", str(malformed_file)])
    assert code == 2
    err = capsys.readouterr().err
    assert "column" in err


def test_run_corrupted_assignment_exits_3(corrupted_file, capsys):
    code = main(["run", str(corrupted_file)])
    assert code == 3
    err = capsys.readouterr().err
    assert "boundaries" in err


def test_run_missing_file_exits_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.json")]) == 2


def test_run_multiple_files_in_parallel(path2_file, pair2_file, tmp_path, monkeypatch):
    monkeypatch.setenv("LOOPSS_THREADS", "2")
    out_dir = tmp_path / "reports"
    code = main(["run", str(path2_file), str(pair2_file), "--out-dir", str(out_dir)])
    assert code == 0
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == ["free_loop_cpn_2.report.json", "path_cpn_diag_2.report.json"]


def test_run_multiple_files_need_out_dir(path2_file, pair2_file, capsys):
    assert main(["run", str(path2_file), str(pair2_file)]) == 2


def test_run_page_cap(path2_file, tmp_path):
    out = tmp_path / "partial.json"
    assert main(["run", str(path2_file), "--pages", "3", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["pages_computed"] == [2, 3]
    assert report["collapse"] is None


def test_render_ascii_and_torsion(pair2_file, tmp_path, capsys):
    out = tmp_path / "report.json"
    main(["run", str(pair2_file), "--out", str(out)])
    code = main(["render", str(out), "--page", "5", "--format", "ascii"])
    assert code == 0
    text = capsys.readouterr().out
    assert "T(3)" in text


def test_render_latex(pair2_file, tmp_path, capsys):
    out = tmp_path / "report.json"
    main(["run", str(pair2_file), "--out", str(out)])
    assert main(["render", str(out), "--page", "4", "--format", "latex"]) == 0
    assert "tikzpicture" in capsys.readouterr().out


def test_render_json_round_trip(pair2_file, tmp_path, capsys):
    out = tmp_path / "report.json"
    main(["run", str(pair2_file), "--out", str(out)])
    assert main(["render", str(out), "--format", "json"]) == 0
    rendered = capsys.readouterr().out
    assert json.loads(rendered) == json.loads(out.read_text())


def test_render_unknown_page_exits_2(pair2_file, tmp_path, capsys):
    out = tmp_path / "report.json"
    main(["run", str(pair2_file), "--out", str(out)])
    assert main(["render", str(out), "--page", "99"]) == 2


def test_audit_consistent_exits_0(path2_file, capsys):
    code = main(["audit", str(path2_file)])
    assert code == 0
    assert "consistent" in capsys.readouterr().out


def test_audit_discrepancies_exit_1_and_name_the_candidate(path2_without_top_file, capsys):
    code = main(["audit", str(path2_without_top_file)])
    assert code == 1
    out = capsys.readouterr().out
    assert "total degree 5" in out
    assert "d_4 from (0,4)" in out


def test_audit_without_target_exits_2(pair2_file, capsys):
    assert main(["audit", str(pair2_file)]) == 2


def test_cli_against_live_server(path2_file, pair2_file, tmp_path, monkeypatch):
    # spin the service up in-process and point the thin client at it
    import threading
    import time

    import uvicorn

    from loopss.service import app

    config = uvicorn.Config(app, host="127.0.0.1", port=8943, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    for _ in range(100):
        if server.started:
            break
        time.sleep(0.05)
    assert server.started
    try:
        url = "http://127.0.0.1:8943"
        out = tmp_path / "report.json"
        assert main(["run", str(pair2_file), "--out", str(out), "--server", url]) == 0
        assert "3*u*x^2" in out.read_text()
        assert main(["audit", str(path2_file), "--server", url]) == 0
        assert main(["render", str(out), "--page", "5", "--server", url]) == 0
    finally:
        server.should_exit = True
        thread.join(timeout=5)
