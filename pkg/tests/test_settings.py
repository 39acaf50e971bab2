import json

import pytest

from errors import ConfigError
from settings import ENRICHMENT_PRESETS, PipelineConfig


class TestPresets:
    @pytest.mark.parametrize(
        "enrichment, model, concept, lexical",
        [
            ("plain", "boit", None, None),
            ("ssn1", "boit", "cd", "lcu"),
            ("ssn2", "boit", "diffusion", "lcu"),
            ("ssk1", "boit", "diffusion", "lcu"),
            ("ssk2", "ddg", "diffusion", "lcu"),
        ],
    )
    def test_resolution(self, enrichment, model, concept, lexical):
        config = PipelineConfig(model="boit", enrichment=enrichment)
        assert config.effective_model == model
        assert config.effective_concept == concept
        assert config.effective_lexical == lexical

    def test_ssk1_forces_boit(self):
        assert PipelineConfig(model="boi", enrichment="ssk1").effective_model == "boit"

    def test_custom(self):
        config = PipelineConfig(enrichment="custom", concept="wup", lexical="none")
        assert config.effective_concept == "wup"
        assert config.effective_lexical is None
        assert not config.is_plain

    def test_every_named_preset_is_known(self):
        assert set(ENRICHMENT_PRESETS) | {"custom"} == {"plain", "ssn1", "ssn2", "ssk1", "ssk2", "custom"}


class TestValidation:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"model": "lda"},
            {"enrichment": "ssn3"},
            {"weighting": "bm25"},
            {"clustering": "ward"},
            {"k": 0},
            {"min_package_size": 0},
            {"min_package_size": 10, "max_package_size": 5},
            {"jobs": 0},
        ],
    )
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            PipelineConfig(**overrides)


class TestOverrides:
    def test_none_values_are_ignored(self):
        config = PipelineConfig(model="boi").with_overrides(model=None, k=4)
        assert config.model == "boi"
        assert config.k == 4

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            PipelineConfig().with_overrides(colour="blue")

    def test_from_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"enrichment": "ssk2", "alpha_diffusion": 0.25}), encoding="utf-8")
        config = PipelineConfig.from_json(path)
        assert config.effective_model == "ddg"
        assert config.alpha_diffusion == 0.25
        assert config.to_dict()["alpha_diffusion"] == 0.25

    @pytest.mark.parametrize("content", ["{pas du json", "[1, 2]", '{"colour": 1}'])
    def test_from_json_errors(self, tmp_path, content):
        path = tmp_path / "run.json"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(ConfigError):
            PipelineConfig.from_json(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineConfig.from_json(tmp_path / "absent.json")
