#!/usr/bin/env python3
"""Convert a CLIP-style checkpoint into the weight-directory layout used by
the clip backend: weights.safetensors + manifest.json + merges.txt.

Works with OpenAI CLIP and open_clip ViT checkpoints (torch state dicts or
safetensors files). Example:

    python3 tools/convert_clip.py \
        --checkpoint ViT-B-32.pt \
        --merges bpe_simple_vocab_16e6.txt.gz \
        --arch vit-b-32 --quick-gelu \
        --out weights/openai-vit-b32
"""

import argparse
import gzip
import json
import math
import os
import re
import struct
import sys

import numpy as np

OPENAI_MEAN = [0.48145466, 0.4578275, 0.40821073]
OPENAI_STD = [0.26862954, 0.26130258, 0.27577711]

VISUAL_KEYS = [
    "visual.conv1.weight",
    "visual.class_embedding",
    "visual.positional_embedding",
    "visual.ln_pre.weight",
    "visual.ln_pre.bias",
    "visual.ln_post.weight",
    "visual.ln_post.bias",
    "visual.proj",
]

TEXT_KEYS = [
    "token_embedding.weight",
    "positional_embedding",
    "ln_final.weight",
    "ln_final.bias",
    "text_projection",
]

BLOCK_SUFFIXES = [
    "ln_1.weight",
    "ln_1.bias",
    "attn.in_proj_weight",
    "attn.in_proj_bias",
    "attn.out_proj.weight",
    "attn.out_proj.bias",
    "ln_2.weight",
    "ln_2.bias",
    "mlp.c_fc.weight",
    "mlp.c_fc.bias",
    "mlp.c_proj.weight",
    "mlp.c_proj.bias",
]


def load_state_dict(path):
    if path.endswith(".safetensors"):
        try:
            from safetensors.numpy import load_file
            return {k: np.asarray(v) for k, v in load_file(path).items()}
        except ImportError:
            sys.exit("safetensors package required for .safetensors input")
    try:
        import torch
    except ImportError:
        sys.exit("torch required for torch checkpoint input")
    obj = torch.load(path, map_location="cpu")
    if hasattr(obj, "state_dict"):
        obj = obj.state_dict()
    if "state_dict" in obj:
        obj = obj["state_dict"]
    out = {}
    for k, v in obj.items():
        k = re.sub(r"^(module\.|model\.)", "", k)
        if hasattr(v, "detach"):
            out[k] = v.detach().float().cpu().numpy()
    return out


def count_blocks(state, prefix):
    n = 0
    while f"{prefix}.{n}.ln_1.weight" in state:
        n += 1
    return n


def write_safetensors(path, tensors):
    header = {}
    offset = 0
    blobs = []
    for name, arr in tensors:
        arr = np.ascontiguousarray(arr, dtype="<f4")
        nbytes = arr.nbytes
        header[name] = {
            "dtype": "F32",
            "shape": list(arr.shape),
            "data_offsets": [offset, offset + nbytes],
        }
        offset += nbytes
        blobs.append(arr.tobytes())
    header_bytes = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)


def read_merges(path, expected_count):
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rt", encoding="utf-8") as f:
        lines = f.read().split("\n")
    merges = [ln for ln in lines[1:] if ln.strip()]
    if expected_count is not None:
        if len(merges) < expected_count:
            sys.exit(
                f"merges file has {len(merges)} pairs, vocabulary needs "
                f"{expected_count}")
        merges = merges[:expected_count]
    return merges


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checkpoint", required=True)
    ap.add_argument("--merges", help="BPE merges file (.txt or .txt.gz)")
    ap.add_argument("--out", required=True, help="Output weight directory")
    ap.add_argument("--arch", default="vit-b-32")
    ap.add_argument("--quick-gelu", action="store_true",
                    help="Use x*sigmoid(1.702x) (OpenAI checkpoints)")
    ap.add_argument("--head-dim", type=int, default=64)
    ap.add_argument("--image-mean", type=float, nargs=3, default=OPENAI_MEAN)
    ap.add_argument("--image-std", type=float, nargs=3, default=OPENAI_STD)
    args = ap.parse_args()

    state = load_state_dict(args.checkpoint)
    missing = [k for k in VISUAL_KEYS if k not in state]
    if missing:
        sys.exit(f"checkpoint is missing visual tensors: {missing}")

    conv = state["visual.conv1.weight"]
    width, _, patch, _ = conv.shape
    tokens = state["visual.positional_embedding"].shape[0]
    grid = int(math.isqrt(tokens - 1))
    if 1 + grid * grid != tokens:
        sys.exit(f"cannot infer grid from {tokens} visual tokens")
    layers = count_blocks(state, "visual.transformer.resblocks")
    embed_dim = state["visual.proj"].shape[1]

    manifest = {
        "architecture": args.arch,
        "input_size": grid * patch,
        "patch_size": int(patch),
        "width": int(width),
        "layers": layers,
        "heads": int(width) // args.head_dim,
        "embed_dim": int(embed_dim),
        "quick_gelu": bool(args.quick_gelu),
        "image_mean": args.image_mean,
        "image_std": args.image_std,
    }

    tensors = [(k, state[k]) for k in VISUAL_KEYS]
    for i in range(layers):
        for suffix in BLOCK_SUFFIXES:
            key = f"visual.transformer.resblocks.{i}.{suffix}"
            tensors.append((key, state[key]))

    has_text = all(k in state for k in TEXT_KEYS)
    if has_text:
        if not args.merges:
            sys.exit("--merges is required for checkpoints with a text tower")
        text_layers = count_blocks(state, "transformer.resblocks")
        text_width = state["token_embedding.weight"].shape[1]
        vocab = state["token_embedding.weight"].shape[0]
        manifest["text"] = {
            "context": int(state["positional_embedding"].shape[0]),
            "vocab_size": int(vocab),
            "width": int(text_width),
            "heads": int(text_width) // args.head_dim,
            "layers": text_layers,
        }
        tensors += [(k, state[k]) for k in TEXT_KEYS]
        for i in range(text_layers):
            for suffix in BLOCK_SUFFIXES:
                key = f"transformer.resblocks.{i}.{suffix}"
                tensors.append((key, state[key]))

    os.makedirs(args.out, exist_ok=True)
    write_safetensors(os.path.join(args.out, "weights.safetensors"), tensors)
    with open(os.path.join(args.out, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")

    if has_text:
        merges = read_merges(args.merges, int(vocab) - 256 * 2 - 2)
        with open(os.path.join(args.out, "merges.txt"), "w",
                  encoding="utf-8") as f:
            f.write("#version: das-bpe-1\n")
            f.write("\n".join(merges))
            f.write("\n")

    print(f"wrote {args.out}: {len(tensors)} tensors, "
          f"visual {width}x{layers}L patch {patch}"
          + (f", text {text_width}x{text_layers}L" if has_text else ""))


if __name__ == "__main__":
    main()
