from validate_pipeline import check_direction, check_lexical, check_table, check_wsd, validate_pipeline


def test_individual_checks(fixtures_dir):
    assert check_table(fixtures_dir)[0]
    assert check_lexical() == (True, "LCS = 'caroe', LCU = 'car'")
    assert check_wsd(fixtures_dir)[0]


def test_full_validation_writes_report(fixtures_dir, tmp_path):
    rapport = tmp_path / "rapport_validation.md"
    assert validate_pipeline(str(fixtures_dir), str(rapport)) is True
    text = rapport.read_text(encoding="utf-8")
    assert "CHAÎNE DE TRAITEMENT OK" in text
    assert "❌" not in text


def test_missing_fixtures_fail(tmp_path):
    rapport = tmp_path / "rapport_validation.md"
    assert validate_pipeline(str(tmp_path / "absent"), str(rapport)) is False
    assert "❌" in rapport.read_text(encoding="utf-8")


def test_direction_uses_shipped_presets(fixtures_dir, tmp_path):
    ok, detail = check_direction(fixtures_dir, tmp_path)
    assert ok
    assert "PD ssk1 = " in detail and "PD ssk2 = " in detail
