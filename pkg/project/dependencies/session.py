import pathlib
from contextlib import contextmanager
from typing import Iterator, Union

from db.base import ArtifactSession


@contextmanager
def get_session(root: Union[str, pathlib.Path]) -> Iterator[ArtifactSession]:
    with ArtifactSession(root) as session:
        yield session
