from pathlib import Path

from tnle.io import encode_image


def write_manifest(images, directory, stem="img"):
    """Encode ``images`` as PPM files in ``directory`` and return the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i, img in enumerate(images):
        name = f"{stem}{i:03d}.ppm"
        encode_image(img, directory / name)
        names.append(name)
    manifest = directory / f"{stem}.txt"
    manifest.write_text("# synthetic corpus\n" + "\n".join(names) + "\n", encoding="utf-8")
    return manifest
