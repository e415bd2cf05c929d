from pathlib import Path
from sys import path
path.append(str(Path(__file__).parent.parent / "src"))

from rich.console import Console

from spectral_sparse import BLUR_SYSTEMS_PATH, BlurSpec, SingularSystemArchive, blur_operator, cond2, svd

IMAGE_SIZE = 64
BAND = 16
TAUS = (0.6, 0.7, 0.8, 0.9)

def write_blur_systems(archive: Path):
    """ Write the singular systems of the blur operators of the conditioning table. """
    out = Console()
    with SingularSystemArchive(archive, "w") as file:
        for tau in TAUS:
            spec = BlurSpec(IMAGE_SIZE, BAND, tau)
            out.print(f"Writing singular system {spec.key}... ", end="")
            try:
                with out.status(f"Decomposing the {IMAGE_SIZE**2} x {IMAGE_SIZE**2} operator..."):
                    system = svd(blur_operator(spec))
                file.add(spec.key, system)
                out.print(f"[green]Ok.[/green] cond = {cond2(system):.5g}")
            except Exception as e:
                out.print(f"[red]Failed: {e}")
        out.print(f"Stored {len(file.keys())} singular systems in {archive}.")

if __name__ == "__main__":
    write_blur_systems(BLUR_SYSTEMS_PATH)
