"""Export manager for study results: CSV tables, JSON reports and gnuplot scripts."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..algebra.trigpoly import TrigPoly, grid_nodes

logger = logging.getLogger(__name__)

DENSITY_NODES = 256


class ExportManager:
    """Writes every artifact of a study into one output directory."""

    def __init__(self, output_dir: Union[str, Path]):
        """Initialize export manager.

        Args:
            output_dir: Directory receiving the files; created on first write.
        """
        self.output_dir = Path(output_dir)
        self.curves: Dict[str, List[str]] = {}
        self.written: List[str] = []

    def _path(self, filename: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        if filename not in self.written:
            self.written.append(filename)
        return self.output_dir / filename

    def export_table(
        self,
        name: str,
        data: Union[pd.DataFrame, Sequence[dict]],
        plot: bool = False,
    ) -> Path:
        """Write a table to ``<name>.csv``.

        Args:
            name: File stem.
            data: DataFrame or list of row dicts.
            plot: Register the table as a curve for ``plot.gp`` (first column is the abscissa).

        Returns:
            Path: The written file.
        """
        frame = data if isinstance(data, pd.DataFrame) else pd.DataFrame(list(data))
        path = self._path(f"{name}.csv")
        frame.to_csv(path, index=False)
        if plot and len(frame.columns) > 1:
            self.curves[path.name] = [str(c) for c in frame.columns]
        logger.info(f"✅ Exported {len(frame)} rows to {path}")
        return path

    def export_density(
        self,
        name: str,
        density: Union[TrigPoly, np.ndarray],
        nodes: Optional[int] = None,
    ) -> Path:
        """Write a density as ``x,value`` columns.

        A TrigPoly is sampled on ``nodes`` points (256 by default); an array is
        taken as values on its own uniform grid.
        """
        if isinstance(density, TrigPoly):
            x = grid_nodes(nodes or DENSITY_NODES)
            values = density(x)
        else:
            values = np.asarray(density, dtype=float)
            x = grid_nodes(values.size)
        return self.export_table(name, pd.DataFrame({"x": x, "value": values}), plot=True)

    def export_report(self, report: BaseModel, filename: str = "report.json") -> Path:
        """Write a pydantic report as indented JSON."""
        path = self._path(filename)
        path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"✅ Exported report to {path}")
        return path

    def export_gnuplot(self, filename: str = "plot.gp") -> Optional[Path]:
        """Write a gnuplot script with one plot per registered curve file.

        Error tables (first column ``tau``) are drawn on log-log axes.
        """
        if not self.curves:
            return None
        lines = ["set datafile separator ','", "set key autotitle columnhead", ""]
        for csv_name, columns in self.curves.items():
            stem = csv_name.rsplit(".", 1)[0]
            loglog = columns[0] == "tau"
            lines.append("set terminal pngcairo size 800,600")
            lines.append(f"set output '{stem}.png'")
            lines.append(f"set title '{stem}'")
            lines.append("set logscale xy" if loglog else "unset logscale")
            series = ", ".join(
                f"'{csv_name}' using 1:{i} with linespoints" for i in range(2, len(columns) + 1)
            )
            lines.append(f"plot {series}")
            lines.append("")
        path = self._path(filename)
        path.write_text("\n".join(lines), encoding="utf-8")
        logger.info(f"✅ Exported gnuplot script to {path}")
        return path
