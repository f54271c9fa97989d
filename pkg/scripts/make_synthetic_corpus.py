"""Write a synthetic corpus as PPM files plus a manifest, ready for the ``tnle`` CLI.

    python scripts/make_synthetic_corpus.py --kind training --count 20 --out data/train
    tnle train --manifest data/train/manifest.txt --sigmas 5,10,15,20,25,30 --out bank.txt
"""

import argparse
from pathlib import Path

from tnle.io import encode_image
from tnle.synthetic import KINDS, make_corpus, training_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", choices=KINDS + ("training",), default="training")
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, required=True)
    args = ap.parse_args()

    if args.kind == "training":
        images = training_corpus(args.count, args.size, seed=args.seed)
    else:
        images = make_corpus(args.kind, args.count, args.size, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    names = []
    for i, img in enumerate(images):
        name = f"{args.kind}_{i:03d}.ppm"
        encode_image(img, args.out / name)
        names.append(name)
    manifest = args.out / "manifest.txt"
    manifest.write_text(f"# {args.kind} corpus, {args.size}px, seed {args.seed}\n" + "\n".join(names) + "\n")
    print(f"wrote {len(names)} images and {manifest}")


if __name__ == "__main__":
    main()
