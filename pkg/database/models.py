"""
Database Models - SQLAlchemy run history for the RCP toolkit

Tables:
  - RunRecord: One row per CLI invocation (arguments, seed, outcome,
    manifest digest)

The database lives outside every output directory and never feeds into
artifact digests.
"""
import json
from datetime import datetime
from typing import List, Optional

from sqlalchemy import (
    create_engine,
    Column,
    Integer,
    String,
    DateTime,
    Text,
)
from sqlalchemy.orm import declarative_base, sessionmaker
from loguru import logger

from config.settings import DATABASE_URL, DATABASE_PATH


Base = declarative_base()


# ══════════════════════════════════════════════════════════════════════
# Models
# ══════════════════════════════════════════════════════════════════════

class RunRecord(Base):
    """Logs each CLI run."""
    __tablename__ = "run_records"

    id = Column(Integer, primary_key=True, autoincrement=True)
    subcommand = Column(String(32), nullable=False)
    arguments = Column(Text)                 # JSON
    seed = Column(Integer)
    out_dir = Column(String(500))
    manifest_digest = Column(String(128))
    status = Column(String(20), default="running")  # running, ok, invalid, numeric, selftest_failed, error
    exit_code = Column(Integer)
    message = Column(Text)
    started_at = Column(DateTime, default=datetime.utcnow)
    finished_at = Column(DateTime)

    def __repr__(self):
        return f"<RunRecord #{self.id} {self.subcommand} status={self.status} exit={self.exit_code}>"


# ══════════════════════════════════════════════════════════════════════
# Engine & Session
# ══════════════════════════════════════════════════════════════════════

_engine = None
_Session = None


def get_engine():
    """Get or create the SQLAlchemy engine."""
    global _engine
    if _engine is None:
        DATABASE_PATH.parent.mkdir(parents=True, exist_ok=True)
        _engine = create_engine(DATABASE_URL, echo=False)
    return _engine


def get_db_session():
    """Get a new database session."""
    global _Session
    if _Session is None:
        _Session = sessionmaker(bind=get_engine())
    return _Session()


def init_database():
    """Create all tables if they don't exist."""
    engine = get_engine()
    Base.metadata.create_all(engine)
    logger.debug("Database initialized")


# ══════════════════════════════════════════════════════════════════════
# Run History Helpers
# ══════════════════════════════════════════════════════════════════════

def start_run(subcommand: str, arguments: dict, seed: Optional[int], out_dir: Optional[str]) -> int:
    """Insert a running record and return its id."""
    session = get_db_session()
    try:
        record = RunRecord(
            subcommand=subcommand,
            arguments=json.dumps(arguments, sort_keys=True, default=str),
            seed=None if seed is None else int(seed) % (1 << 63),
            out_dir=out_dir,
        )
        session.add(record)
        session.commit()
        return record.id
    finally:
        session.close()


def finish_run(run_id: int, status: str, exit_code: int, manifest_digest: str = None, message: str = None) -> None:
    """Close a run record with its outcome."""
    session = get_db_session()
    try:
        record = session.get(RunRecord, run_id)
        if record is None:
            logger.warning(f"Run record #{run_id} not found")
            return
        record.status = status
        record.exit_code = exit_code
        record.manifest_digest = manifest_digest
        record.message = message
        record.finished_at = datetime.utcnow()
        session.commit()
    finally:
        session.close()


def recent_runs(limit: int = 20, subcommand: str = None) -> List[RunRecord]:
    """Most recent runs first."""
    session = get_db_session()
    try:
        query = session.query(RunRecord)
        if subcommand:
            query = query.filter_by(subcommand=subcommand)
        runs = query.order_by(RunRecord.id.desc()).limit(limit).all()
        session.expunge_all()
        return runs
    finally:
        session.close()
