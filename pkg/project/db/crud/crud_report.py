from typing import Any, Union

from pydantic import BaseModel

from db.crud.abstract import DalABC


class ReportDAL(DalABC):
    def save(self, name: str, report: Union[BaseModel, dict], **extra: Any) -> None:
        body = report.dict() if isinstance(report, BaseModel) else report
        self.session.write_json(f'{name}.json', {'report': body, **extra, 'config': self.config})

    def load(self, name: str) -> dict:
        return self.session.read_json(f'{name}.json')['report']
