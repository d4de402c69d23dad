import csv
import io
from typing import Dict, Sequence

import numpy as np

from app.core.exception import structural_exception
from db.crud.abstract import DalABC
from db.crud.crud_solution import coordinate_names
from models.free_boundary import FreeBoundaryData


class DiagnosticDAL(DalABC):
    def save_table(self, name: str, columns: Dict[str, Sequence[float]]) -> None:
        """
        CSV with one column per key; all columns must have the same length
        """
        lengths = {len(v) for v in columns.values()}
        if len(lengths) > 1:
            structural_exception(f'table {name} has columns of different lengths {sorted(lengths)}')
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(list(columns))
        writer.writerows(zip(*[np.asarray(v, dtype=float).tolist() for v in columns.values()]))
        self.session.write_text(f'{name}.csv', buffer.getvalue())

    def save_summary(self, name: str, summary: dict) -> None:
        self.session.write_json(f'{name}.json', {**summary, 'config': self.config})

    def save_free_boundary(self, name: str, fb: FreeBoundaryData) -> None:
        """
        boundary cells with coordinates, estimated normals (NaN where none) and
        d sampled along the normal ray
        """
        dim = fb.grid.dim
        names = coordinate_names(dim)
        points = np.array(fb.boundary_points(), dtype=float).reshape(-1, dim)
        normals = np.full_like(points, np.nan)
        for k, idx in enumerate(fb.boundary_cells):
            normal = fb.normals.get(tuple(int(i) for i in idx))
            if normal is not None:
                normals[k] = normal

        columns = {n: points[:, k] for k, n in enumerate(names)}
        columns.update({f'n{n}': normals[:, k] for k, n in enumerate(names)})
        columns['d_ray'] = [fb.ray_distance(idx) for idx in fb.boundary_cells]
        self.save_table(name, columns)
