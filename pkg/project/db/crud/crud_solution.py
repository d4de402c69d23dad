import csv
import io
from typing import Union

import numpy as np

from app.core.exception import structural_exception
from db.crud.abstract import DalABC
from models.grid import GridFunction, coordinates
from schemas.kernel import GridSpec

RAW_DTYPE = '<f8'


def coordinate_names(dim: int):
    return ['x'] if dim == 1 else [f'x{k + 1}' for k in range(dim)]


class SolutionDAL(DalABC):
    """
    name.csv (coordinates, u and extra columns), name.f64 (raw little-endian u)
    and name.json (grid, shape, dtype and the run config)
    """

    def save(self, name: str, u: GridFunction, field: str = 'u', **columns: Union[GridFunction, np.ndarray]) -> None:
        grid = u.grid
        extra = {}
        for key, value in columns.items():
            values = value.values if isinstance(value, GridFunction) else np.asarray(value)
            if values.shape != grid.shape:
                structural_exception(f'column {key} of shape {values.shape} does not fit grid shape {grid.shape}')
            extra[key] = values.ravel().tolist()

        header = coordinate_names(grid.dim) + [field] + list(extra)
        rows = [c.ravel().tolist() for c in coordinates(grid)] + [u.values.ravel().tolist()] + list(extra.values())
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(zip(*rows))
        self.session.write_text(f'{name}.csv', buffer.getvalue())

        self.session.write_bytes(f'{name}.f64', u.values.astype(RAW_DTYPE).tobytes(order='C'))
        self.session.write_json(f'{name}.json', {
            'grid': grid.dict(),
            'shape': list(grid.shape),
            'dtype': RAW_DTYPE,
            'order': 'C',
            'field': field,
            'columns': header,
            'config': self.config,
        })

    def load(self, name: str) -> GridFunction:
        sidecar = self.session.read_json(f'{name}.json')
        grid = GridSpec(**sidecar['grid'])
        values = np.frombuffer(self.session.read_bytes(f'{name}.f64'), dtype=sidecar['dtype'])
        return GridFunction(grid, values.reshape(sidecar['shape'], order=sidecar['order']).astype(float))
