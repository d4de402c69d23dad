import json
import os
import pathlib
from typing import Any, List, Union

from app.core.exception import configuration_exception
from internal.logging import app_logger

LOCK_NAME = '.nlobs.lock'


class ArtifactSession:
    """
    Owns an output directory for one run; a lock file keeps concurrent runs apart
    """

    def __init__(self, root: Union[str, pathlib.Path]):
        self.root = pathlib.Path(root)
        self.written: List[str] = []
        self._lock = self.root / LOCK_NAME
        self._locked = False

    def open(self) -> 'ArtifactSession':
        self.root.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self._lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            configuration_exception(f'output directory {self.root} is in use (remove {self._lock} if stale)')
        with os.fdopen(fd, 'w') as f:
            f.write(str(os.getpid()))
        self._locked = True
        return self

    def close(self) -> None:
        if self._locked:
            self._lock.unlink(missing_ok=True)
            self._locked = False

    def __enter__(self) -> 'ArtifactSession':
        return self.open()

    def __exit__(self, *exc) -> None:
        self.close()

    def path(self, name: str) -> pathlib.Path:
        return self.root / name

    def _record(self, name: str) -> pathlib.Path:
        self.written.append(name)
        app_logger.debug(f'writing {self.root / name}')
        return self.root / name

    def write_text(self, name: str, text: str) -> None:
        self._record(name).write_text(text)

    def write_bytes(self, name: str, data: bytes) -> None:
        self._record(name).write_bytes(data)

    def write_json(self, name: str, payload: Any) -> None:
        self.write_text(name, json.dumps(payload, indent=2))

    def read_json(self, name: str) -> Any:
        return json.loads(self.path(name).read_text())

    def read_bytes(self, name: str) -> bytes:
        return self.path(name).read_bytes()
