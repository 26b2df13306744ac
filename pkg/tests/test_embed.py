import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from abusecascade.embed import (
    FEATURE_DIM,
    FeatureVector,
    Featurizer,
    HashEmbedder,
    HttpEmbedder,
    LaserEmbedder,
    build_provider,
    embed_concat,
    embed_laser,
    embed_transformer,
    pool_hidden_states,
    test_embedder,
)
from abusecascade.embed.providers import EmbeddingProvider
from abusecascade.errors import BackendError, ConfigError, DimensionError
from abusecascade.preprocess import normalize


class ConstProvider(EmbeddingProvider):
    def __init__(self, dim, value, pid=None):
        super().__init__()
        self.output_dim = dim
        self.value = value
        self.provider_id = pid or f"const{value}:{dim}"

    def embed(self, texts):
        return np.full((len(texts), self.output_dim), self.value, dtype=np.float64)


# --- test embedder ----------------------------------------------------------

def test_test_embedder_deterministic():
    a = test_embedder(768, 7).embed_one("abc")
    b = test_embedder(768, 7).embed_one("abc")
    assert np.array_equal(a, b)


def test_test_embedder_distinct_texts():
    emb = test_embedder(768, 7)
    assert not np.array_equal(emb.embed_one("abc"), emb.embed_one("abd"))
    # reordered words are different strings and get different vectors
    assert not np.array_equal(emb.embed_one("a b"), emb.embed_one("b a"))


@pytest.mark.parametrize("text", ["abc", "", "a much longer text with many words in it"])
def test_test_embedder_unit_norm(text):
    assert abs(np.linalg.norm(test_embedder(768, 7).embed_one(text)) - 1.0) < 1e-9


def test_test_embedder_seed_and_dim_matter():
    assert not np.array_equal(test_embedder(768, 7).embed_one("x"), test_embedder(768, 8).embed_one("x"))
    assert test_embedder(1024, 7).embed_one("x").shape == (1024,)


def test_test_embedder_rejects_bad_dim():
    with pytest.raises(ConfigError):
        HashEmbedder(0)


def test_provider_shape_check():
    class Broken(ConstProvider):
        def embed(self, texts):
            return np.zeros((len(texts), 3))

    with pytest.raises(BackendError, match="shape"):
        Broken(4, 0.0)(["a"])


def test_provider_rejects_nan():
    with pytest.raises(BackendError, match="non-finite"):
        ConstProvider(4, np.nan)(["a"])


def test_build_provider():
    assert isinstance(build_provider({"kind": "test", "dim": 768, "seed": 3}), HashEmbedder)
    assert build_provider({"kind": "laser"}).output_dim == 1024
    assert build_provider({"kind": "transformer"}).output_dim == 768
    with pytest.raises(ConfigError):
        build_provider({"kind": "nope"})
    with pytest.raises(ConfigError):
        build_provider({"kind": "test", "dim": 768, "bogus": 1})


def test_laser_backend_unavailable():
    pytest.importorskip("numpy")
    try:
        import laser_encoders  # noqa: F401
        pytest.skip("laser_encoders installed")
    except ImportError:
        pass
    with pytest.raises(BackendError, match="LASER"):
        LaserEmbedder()(["hello"])


# --- embed operations -------------------------------------------------------

def test_embed_transformer_and_laser(providers):
    text = normalize("Some Tweet 12", "EN")
    t = embed_transformer(text, providers[0])
    l = embed_laser(text, providers[1])
    assert t.shape == (768,) and l.shape == (1024,)
    assert np.all(np.isfinite(t)) and np.all(np.isfinite(l))
    assert np.array_equal(t, embed_transformer(text, providers[0]))
    assert embed_laser(normalize("", "EN"), providers[1]).shape == (1024,)
    with pytest.raises(ConfigError):
        embed_transformer(text, providers[1])


def test_texts_equal_after_preprocessing_embed_equal(providers):
    a = normalize("Look https://t.co/AAA here", "EN")
    b = normalize("look   https://bit.ly/zzz HERE", "EN")
    assert a.text == b.text
    assert np.array_equal(embed_transformer(a, providers[0]), embed_transformer(b, providers[0]))


def test_embed_requires_preprocessed_text(providers):
    with pytest.raises(TypeError, match="normalize"):
        embed_transformer("raw text", providers[0])


def test_embed_concat_dims(providers):
    fv = embed_concat(normalize("x", "EN"), providers)
    assert len(fv.combined) == FEATURE_DIM == 1792


def test_embed_concat_dim_mismatch():
    with pytest.raises(ConfigError):
        embed_concat(normalize("x", "EN"), [HashEmbedder(512, 1), HashEmbedder(1024, 2)])


def test_embed_concat_order():
    fv = embed_concat(normalize("x", "EN"), [ConstProvider(768, 0.0), ConstProvider(1024, 1.0)])
    assert np.array_equal(fv.combined[:768], np.zeros(768))
    assert np.array_equal(fv.combined[768:], np.ones(1024))
    assert np.array_equal(fv.transformer_part, np.zeros(768))
    assert np.array_equal(fv.laser_part, np.ones(1024))


def test_feature_vector_validation():
    with pytest.raises(DimensionError):
        FeatureVector(np.zeros(1791))
    with pytest.raises(DimensionError):
        FeatureVector(np.full(1792, np.inf))
    with pytest.raises(DimensionError):
        FeatureVector.from_parts(np.zeros(512), np.zeros(1024))


def test_featurizer_matches_single(providers):
    texts = [normalize(t, "EN", str(i)) for i, t in enumerate(["a b", "c 1", "a b", ""])]
    feats = Featurizer(providers, batch_size=3).features(texts)
    for text, fv in zip(texts, feats):
        assert fv == embed_concat(text, providers)


# --- pooling ----------------------------------------------------------------

def _pool_oracle(hs, mask, last_n, mode):
    """Loop-by-loop reference implementation."""
    n_layers, batch, tokens, hidden = hs.shape
    out = np.zeros((batch, hidden))
    for b in range(batch):
        layer_vecs = []
        for layer in range(n_layers - last_n, n_layers):
            if mode == "cls":
                layer_vecs.append(hs[layer, b, 0])
                continue
            acc = np.zeros(hidden)
            n = 0
            for t in range(tokens):
                if mask[b, t]:
                    acc += hs[layer, b, t]
                    n += 1
            layer_vecs.append(acc / max(n, 1))
        out[b] = sum(layer_vecs) / len(layer_vecs)
    return out


@pytest.mark.parametrize("mode", ["token_mean", "cls"])
def test_pooling_matches_oracle(mode):
    rng = np.random.default_rng(0)
    hs = rng.standard_normal((13, 3, 6, 8))
    mask = np.array([[1, 1, 1, 1, 1, 1], [1, 1, 1, 0, 0, 0], [1, 0, 0, 0, 0, 0]])
    np.testing.assert_allclose(pool_hidden_states(hs, mask, 11, mode), _pool_oracle(hs, mask, 11, mode), atol=1e-12)


def test_pooling_skips_embedding_and_first_layer():
    hs = np.zeros((13, 1, 2, 4))
    hs[0] = 100.0  # embedding output
    hs[1] = -100.0  # first encoder layer
    hs[2:] = 1.0
    assert np.array_equal(pool_hidden_states(hs, np.ones((1, 2))), np.ones((1, 4)))


def test_pooling_ignores_padding():
    hs = np.zeros((13, 1, 3, 2))
    hs[:, 0, 2] = 50.0
    np.testing.assert_array_equal(pool_hidden_states(hs, np.array([[1, 1, 0]])), np.zeros((1, 2)))


def test_pooling_validates():
    with pytest.raises(ValueError):
        pool_hidden_states(np.zeros((13, 1, 2, 4)), np.ones((1, 2)), last_n=13)
    with pytest.raises(ValueError):
        pool_hidden_states(np.zeros((13, 1, 2, 4)), np.ones((1, 2)), mode="max")


def test_transformer_embedder_with_tiny_local_model(tmp_path):
    torch = pytest.importorskip("torch")
    transformers = pytest.importorskip("transformers")
    from abusecascade.embed import TransformerEmbedder

    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "hello", "world", "number", "!", "@"]
    (tmp_path / "vocab.txt").write_text("\n".join(vocab) + "\n")
    tok = transformers.BertTokenizer(str(tmp_path / "vocab.txt"), do_lower_case=False)
    cfg = transformers.BertConfig(vocab_size=len(vocab), hidden_size=16, num_hidden_layers=12,
                                  num_attention_heads=2, intermediate_size=32, max_position_embeddings=32)
    torch.manual_seed(0)
    model = transformers.BertModel(cfg).eval()
    model.save_pretrained(tmp_path)
    tok.save_pretrained(tmp_path)

    emb = TransformerEmbedder(str(tmp_path), output_dim=16, max_length=8, batch_size=2)
    texts = ["hello world", "hello", "world ! @ hello number hello world hello world hello"]
    out = emb(texts)
    assert out.shape == (3, 16) and np.all(np.isfinite(out))
    np.testing.assert_allclose(emb(texts[:1])[0], out[0], atol=1e-6)

    # independent recomputation of the pooling rule straight from the model
    enc = tok([texts[0]], return_tensors="pt")
    with torch.no_grad():
        hidden = model(**enc, output_hidden_states=True).hidden_states
    expected = torch.stack([h[0].mean(dim=0) for h in hidden[2:]]).mean(dim=0).numpy()
    np.testing.assert_allclose(out[0], expected, atol=1e-5)


# --- http provider ----------------------------------------------------------

class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        vectors = [[float(len(t))] * 4 for t in body["texts"]]
        data = json.dumps({"vectors": vectors}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


def test_http_embedder_round_trip():
    pytest.importorskip("httpx")
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        emb = HttpEmbedder(f"http://127.0.0.1:{server.server_port}/embed", "remote:v1", 4)
        out = emb(["ab", "abcd"])
        np.testing.assert_array_equal(out, [[2.0] * 4, [4.0] * 4])
    finally:
        server.shutdown()


def test_http_embedder_unreachable():
    pytest.importorskip("httpx")
    emb = HttpEmbedder("http://127.0.0.1:9/embed", "remote:v1", 4, timeout=1.0)
    with pytest.raises(BackendError):
        emb(["x"])
