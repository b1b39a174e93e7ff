import json

import pytest
import torch

from jamlab.checkpoint import CheckpointError, checkpoint_hash, load_checkpoint, save_checkpoint
from jamlab.model import GFNet, ModelConfig
from jamlab.nn import AdamState, adam_step

CFG = ModelConfig(n_classes=3, iq_feature_dim=8, iq_widths=(4, 4, 8), stft_feature_dim=8,
                  stft_stem_channels=4, stft_stages=((1, 8, 3, 2),))


def trained():
    torch.manual_seed(0)
    m = GFNet(CFG)
    m.set_stats_normalization(torch.arange(6.0), torch.arange(1.0, 7.0))
    opt = AdamState()
    m(torch.randn(2, 2, 4000), torch.rand(2, 224, 224), torch.randn(2, 6)).logits.sum().backward()
    adam_step(opt, dict(m.named_parameters()))
    return m, opt


def test_roundtrip_bit_exact(tmp_path):
    m, opt = trained()
    save_checkpoint(tmp_path / "c", m, opt, schedule={"epoch": 3}, extra={"class_ids": [1, 2, 3]})
    back, manifest, opt2 = load_checkpoint(tmp_path / "c", with_optimizer=True)
    assert back.cfg == CFG
    for (k, a), b in zip(m.state_dict().items(), back.state_dict().values()):
        assert a.dtype == b.dtype and torch.equal(a, b), k
    assert manifest["schedule"] == {"epoch": 3}
    assert manifest["extra"]["class_ids"] == [1, 2, 3]
    assert opt2.step == 1
    for k in opt.exp_avg:
        assert torch.equal(opt.exp_avg[k], opt2.exp_avg[k])
        assert torch.equal(opt.exp_avg_sq[k], opt2.exp_avg_sq[k])


def test_manifest_contents(tmp_path):
    m, _ = trained()
    save_checkpoint(tmp_path, m)
    man = json.loads((tmp_path / "manifest.json").read_text())
    names = {t["name"] for t in man["tensors"]}
    assert "stats_mean" in names and "gate_mlp.2.weight" in names
    assert man["stats_std"] == [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    assert all(t["dtype"].startswith("<") for t in man["tensors"])


def test_hash_stable(tmp_path):
    m, _ = trained()
    save_checkpoint(tmp_path / "a", m)
    save_checkpoint(tmp_path / "b", m)
    assert checkpoint_hash(tmp_path / "a") == checkpoint_hash(tmp_path / "b")


def test_config_mismatch_detected(tmp_path):
    m, _ = trained()
    save_checkpoint(tmp_path, m)
    man = json.loads((tmp_path / "manifest.json").read_text())
    man["model_config"]["iq_feature_dim"] = 16
    (tmp_path / "manifest.json").write_text(json.dumps(man))
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path)


def test_missing_and_truncated(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nothing")
    m, _ = trained()
    save_checkpoint(tmp_path, m)
    blob = (tmp_path / "tensors.bin").read_bytes()
    (tmp_path / "tensors.bin").write_bytes(blob[:-4])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path)
    with pytest.raises(CheckpointError):
        save_checkpoint(tmp_path / "x", m)
        load_checkpoint(tmp_path / "x", with_optimizer=True)
