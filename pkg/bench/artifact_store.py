"""
Artifact store for benchmark outputs.

This module owns the output directory: every CSV produced by the CLI is
written through the store, which keeps a catalog of what was written. All
numeric fields are formatted with 6 significant digits so that identical
results give byte-identical files.
"""

import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd


logger = logging.getLogger(__name__)


FLOAT_FORMAT = "%.6g"


class ArtifactType(str, Enum):
    """Types of benchmark artifacts."""

    RMSE_TABLE = "rmse_table"
    PATHS = "paths"
    ENERGY_TRACE = "energy_trace"


# Stable CSV headers by artifact type
COLUMNS: Dict[ArtifactType, List[str]] = {
    ArtifactType.RMSE_TABLE: ["filter", "assumed_q_label", "mean_rmse", "stderr_rmse", "n_failed_runs"],
    ArtifactType.PATHS: ["t", "true_px", "true_py", "est_px", "est_py"],
    ArtifactType.ENERGY_TRACE: ["iteration", "energy", "step_size"],
}


class Artifact:
    """Represents one written output file."""

    def __init__(
        self,
        name: str,
        artifact_type: ArtifactType,
        file_path: Path,
        metadata: Optional[Dict[str, Any]] = None
    ):
        """
        Initialize an artifact.

        Args:
            name: File name
            artifact_type: Type of artifact
            file_path: Path of the written file
            metadata: Additional metadata (rows, filter, run...)
        """
        self.name = name
        self.artifact_type = artifact_type
        self.file_path = file_path
        self.metadata = metadata or {}

    def exists(self) -> bool:
        """Check if artifact file exists."""
        return self.file_path.exists()

    def read_frame(self) -> pd.DataFrame:
        """
        Read the artifact back as a DataFrame.

        Raises:
            FileNotFoundError: If artifact doesn't exist
        """
        if not self.exists():
            raise FileNotFoundError(f"Artifact not found: {self.file_path}")

        return pd.read_csv(self.file_path)


class ArtifactStore:
    """
    Writes benchmark CSVs into one output directory.
    """

    def __init__(self, output_dir: Path):
        """
        Initialize artifact store.

        Args:
            output_dir: Directory for the CSV files (created if missing)
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

        # In-memory catalog
        self._catalog: Dict[str, Artifact] = {}

        logger.info(f"Artifact store initialized at {self.output_dir}")

    def store_frame(
        self,
        name: str,
        artifact_type: ArtifactType,
        frame: pd.DataFrame,
        metadata: Optional[Dict[str, Any]] = None
    ) -> Artifact:
        """
        Write a DataFrame as CSV with the stable header of its type.

        Args:
            name: File name (e.g., "rmse_table.csv")
            artifact_type: Type of artifact
            frame: Rows to write; must contain the type's columns
            metadata: Additional metadata

        Returns:
            Created artifact
        """
        columns = COLUMNS[artifact_type]
        missing = [column for column in columns if column not in frame.columns]
        if missing:
            raise ValueError(f"Frame for {artifact_type.value} is missing columns {missing}")

        file_path = self.output_dir / name
        frame[columns].to_csv(file_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

        artifact = Artifact(
            name=name,
            artifact_type=artifact_type,
            file_path=file_path,
            metadata={"rows": len(frame), **(metadata or {})}
        )
        self._catalog[name] = artifact

        logger.info(f"Stored artifact '{name}' (type={artifact_type.value}, rows={len(frame)}) at {file_path}")

        return artifact

    def store_rmse_table(self, rows: List[Dict[str, Any]]) -> Artifact:
        """Write rmse_table.csv."""
        frame = pd.DataFrame(rows, columns=COLUMNS[ArtifactType.RMSE_TABLE])
        return self.store_frame("rmse_table.csv", ArtifactType.RMSE_TABLE, frame)

    def store_path(self, filter_id: str, run: int, frame: pd.DataFrame) -> Artifact:
        """Write paths_<filter>_<run>.csv."""
        return self.store_frame(
            f"paths_{filter_id}_{run}.csv",
            ArtifactType.PATHS,
            frame,
            metadata={"filter": filter_id, "run": run}
        )

    def store_energy_trace(self, frame: pd.DataFrame, metadata: Optional[Dict[str, Any]] = None) -> Artifact:
        """Write energy_trace.csv."""
        return self.store_frame("energy_trace.csv", ArtifactType.ENERGY_TRACE, frame, metadata)

    def retrieve(self, name: str) -> Optional[Artifact]:
        """
        Retrieve an artifact written by this store.

        Returns:
            Artifact or None if not found
        """
        artifact = self._catalog.get(name)
        if artifact is None:
            logger.warning(f"Artifact not found: {name}")
        return artifact

    def list_by_type(self, artifact_type: ArtifactType) -> List[Artifact]:
        """List all artifacts of a specific type."""
        return [
            artifact for artifact in self._catalog.values()
            if artifact.artifact_type == artifact_type
        ]

    def list_all(self) -> List[Artifact]:
        """List all artifacts in the catalog."""
        return list(self._catalog.values())
