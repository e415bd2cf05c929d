from pathlib import Path
from typing import Literal
import io
import logging
import tarfile

import numpy as np

from ..linalg import SingularSystem

__all__ = ["BLUR_SYSTEMS_PATH", "SingularSystemArchive"]

log = logging.getLogger(__name__)

BLUR_SYSTEMS_PATH = (Path(__file__).parent / "blur_systems.tar.gz").absolute()
"""Default location of precomputed blur operator decompositions (see tools/)."""


class SingularSystemArchive:
    """ Precomputed singular systems stored in a tar.gz archive.

    Decomposing a large operator can take minutes, while the operator of a
    deblurring problem is known in advance. The archive therefore stores singular
    systems as one npz file per operator. The filename is the operator key, e.g.
    "blur-n64-band16-tau0.7.npz".

    The class is meant to be used as a context manager using the "with" statement.
    """

    _SUFFIX = ".npz"

    def __init__(self, archive: Path | str, mode: Literal["w", "r"] = "r"):
        self._filename = Path(archive)
        self._mode = mode

    def _normalize(self, key: str) -> str:
        """ Correct minor variations in the key, e.g. a trailing suffix or spaces."""
        key = key.strip().removesuffix(self._SUFFIX)
        if not key:
            raise KeyError("Empty operator key.")
        return key

    def add(self, key: str, system: SingularSystem):
        """ Add a singular system to the archive.

        Args:
            key: The name of the operator.
            system: The singular system to store.
        """
        key = self._normalize(key)
        file = io.BytesIO()
        np.savez(
            file,
            sigma=system.sigma,
            U=system.U,
            V=system.V,
            rank_tol=np.float64(system.rank_tol),
            shape=np.array(system.shape, dtype=np.int64),
        )
        file.seek(0)
        info = tarfile.TarInfo(key + self._SUFFIX)
        info.size = len(file.getvalue())
        self._tar.addfile(info, file)
        log.debug("Stored singular system %s (rank %d).", key, system.rank)

    def find(self, key: str) -> str:
        """ Return the member name for the given key.

        Raises:
            KeyError: If the archive holds no such operator.
        """
        key = self._normalize(key)
        if key in self.keys():
            return key + self._SUFFIX
        raise KeyError(f'Operator "{key}" not found in {self._filename}.')

    def get(self, key: str) -> SingularSystem:
        """ Return the singular system stored under the given key."""
        member = self.find(key)
        file = io.BytesIO(self._tar.extractfile(member).read())
        with np.load(file) as data:
            system = SingularSystem(
                sigma=data["sigma"],
                U=data["U"],
                V=data["V"],
                rank_tol=float(data["rank_tol"]),
                shape=tuple(int(e) for e in data["shape"]),
            )
        log.debug("Loaded singular system %s from %s.", key, self._filename)
        return system

    def keys(self) -> list[str]:
        """ Return the keys of all operators in the archive."""
        return [e.removesuffix(self._SUFFIX) for e in self._tar.getnames()]

    @classmethod
    def load(cls, archive: Path | str, key: str) -> SingularSystem:
        """ Load one singular system from an archive.

        Args:
            archive: The archive to read.
            key: The operator key.
        """
        with cls(archive, "r") as file:
            return file.get(key)

    def __enter__(self):
        self._tar = tarfile.open(str(self._filename), f"{self._mode}:gz")
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self._tar.close()
