"""Config parsing, validation, and client factories."""

import pytest

from fmea_rag.config import (
    EmbedderSettings,
    LlmSettings,
    RetrievalSettings,
    ServiceConfig,
    build_embedder,
    build_llm,
    load_config,
    parse_config,
)
from fmea_rag.embedding import DEFAULT_DIMENSION, HashingEmbedder, RemoteEmbedder
from fmea_rag.errors import ConfigError
from fmea_rag.llm import RemoteLlm, ScriptedLlm


class TestDefaults:
    def test_empty_object_gives_full_defaults(self):
        config = parse_config("{}")
        assert config == ServiceConfig()
        assert config.listen_host == "127.0.0.1"
        assert config.listen_port == 8077
        assert config.data_dir == "fmea_data"
        assert config.embedder.kind == "local"
        assert config.embedder.dimension == DEFAULT_DIMENSION
        assert config.llm.kind == "scripted"
        assert config.retrieval.top_k == 3
        assert config.embed_workers == 1

    def test_partial_sections_merge_with_defaults(self):
        config = parse_config('{"embedder": {"dimension": 64}, "listen_port": 9000}')
        assert config.embedder.dimension == 64
        assert config.embedder.kind == "local"
        assert config.listen_port == 9000


class TestValidation:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            parse_config('{"listen_prot": 1}')

    def test_unknown_section_key(self):
        with pytest.raises(ConfigError, match="unknown embedder keys"):
            parse_config('{"embedder": {"dimensions": 64}}')

    def test_non_json(self):
        with pytest.raises(ConfigError, match="not valid JSON"):
            parse_config("listen_port: 9000")

    def test_non_object_root(self):
        with pytest.raises(ConfigError, match="root must be an object"):
            parse_config("[1, 2]")

    def test_non_object_section(self):
        with pytest.raises(ConfigError, match="llm section must be an object"):
            parse_config('{"llm": "scripted"}')

    @pytest.mark.parametrize("port", [0, -1, 65536])
    def test_port_range(self, port):
        with pytest.raises(ConfigError, match="listen_port"):
            ServiceConfig(listen_port=port)

    def test_embed_workers_floor(self):
        with pytest.raises(ConfigError, match="embed_workers"):
            ServiceConfig(embed_workers=0)

    def test_retrieval_bounds(self):
        with pytest.raises(ConfigError, match="top_k"):
            RetrievalSettings(top_k=0)
        with pytest.raises(ConfigError, match="query_row_cap"):
            RetrievalSettings(query_row_cap=0)

    def test_unknown_embedder_kind(self):
        with pytest.raises(ConfigError, match="unknown embedder kind"):
            EmbedderSettings(kind="gpu")

    def test_unknown_llm_kind(self):
        with pytest.raises(ConfigError, match="unknown llm kind"):
            LlmSettings(kind="oracle")

    def test_remote_embedder_needs_endpoint_and_credential_env(self):
        with pytest.raises(ConfigError, match="requires an endpoint"):
            EmbedderSettings(kind="remote", credential_env="KEY")
        with pytest.raises(ConfigError, match="credential_env"):
            EmbedderSettings(kind="remote", endpoint="http://e")
        EmbedderSettings(kind="remote", endpoint="http://e", credential_env="KEY")

    def test_remote_llm_needs_endpoint_and_credential_env(self):
        with pytest.raises(ConfigError, match="requires an endpoint"):
            LlmSettings(kind="remote", credential_env="KEY")
        with pytest.raises(ConfigError, match="credential_env"):
            LlmSettings(kind="remote", endpoint="http://l")

    def test_local_kinds_refuse_credentials(self):
        with pytest.raises(ConfigError, match="takes no credentials"):
            EmbedderSettings(kind="local", credential_env="KEY")
        with pytest.raises(ConfigError, match="takes no credentials"):
            LlmSettings(kind="scripted", credential_env="KEY")


class TestLoadConfig:
    def test_reads_a_file(self, tmp_path):
        path = tmp_path / "service.json"
        path.write_text('{"listen_port": 9001}')
        assert load_config(path).listen_port == 9001

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config file"):
            load_config(tmp_path / "absent.json")


class TestFactories:
    def test_local_embedder(self):
        embedder = build_embedder(EmbedderSettings(dimension=32, seed=5))
        assert isinstance(embedder, HashingEmbedder)
        assert embedder.dimension == 32
        # seed reaches the hasher: a different seed changes vectors
        other = build_embedder(EmbedderSettings(dimension=32, seed=6))
        import numpy as np

        assert not np.array_equal(embedder.embed("weld"), other.embed("weld"))

    def test_remote_embedder_reads_env_credential(self, monkeypatch):
        monkeypatch.setenv("EMB_KEY", "secret-token")
        embedder = build_embedder(
            EmbedderSettings(
                kind="remote",
                dimension=16,
                endpoint="http://emb.local/v1",
                credential_env="EMB_KEY",
            )
        )
        assert isinstance(embedder, RemoteEmbedder)
        assert embedder._headers["Authorization"] == "Bearer secret-token"

    def test_remote_embedder_missing_env_fails(self, monkeypatch):
        monkeypatch.delenv("EMB_KEY", raising=False)
        with pytest.raises(ConfigError, match="EMB_KEY is not set"):
            build_embedder(
                EmbedderSettings(
                    kind="remote",
                    endpoint="http://emb.local/v1",
                    credential_env="EMB_KEY",
                )
            )

    def test_scripted_llm_uses_packaged_rules_by_default(self):
        llm = build_llm(LlmSettings())
        assert isinstance(llm, ScriptedLlm)
        assert llm.rules

    def test_scripted_llm_honors_script_path(self, tmp_path):
        path = tmp_path / "rules.csv"
        path.write_text("pattern,completion\nweld,custom reply\n")
        llm = build_llm(LlmSettings(script_path=str(path)))
        assert len(llm.rules) == 1
        assert llm.rules[0].completion == "custom reply"

    def test_remote_llm_reads_env_credential(self, monkeypatch):
        monkeypatch.setenv("LLM_KEY", "abc")
        llm = build_llm(
            LlmSettings(
                kind="remote",
                endpoint="http://llm.local/v1",
                model="chat-9",
                credential_env="LLM_KEY",
            )
        )
        assert isinstance(llm, RemoteLlm)
        assert llm.model == "chat-9"
        assert llm._headers["Authorization"] == "Bearer abc"

    def test_remote_llm_missing_env_fails(self, monkeypatch):
        monkeypatch.delenv("LLM_KEY", raising=False)
        with pytest.raises(ConfigError, match="LLM_KEY is not set"):
            build_llm(
                LlmSettings(
                    kind="remote",
                    endpoint="http://llm.local/v1",
                    credential_env="LLM_KEY",
                )
            )

    def test_empty_env_value_counts_as_missing(self, monkeypatch):
        monkeypatch.setenv("LLM_KEY", "")
        with pytest.raises(ConfigError, match="LLM_KEY is not set"):
            build_llm(
                LlmSettings(
                    kind="remote",
                    endpoint="http://llm.local/v1",
                    credential_env="LLM_KEY",
                )
            )
