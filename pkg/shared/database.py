"""
Run ledger for the membrane toolkit.
Uses SQLAlchemy with SQLite; one row per CLI dispatch plus its check verdicts.
"""

import os
from datetime import datetime
from typing import Optional

from sqlalchemy import JSON, DateTime, Float, ForeignKey, Integer, String, create_engine, func, select
from sqlalchemy.engine import make_url
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship, selectinload, sessionmaker


class Base(DeclarativeBase):
    """Base class for all models."""
    pass


class Run(Base):
    """One dispatch of a pipeline stage."""
    __tablename__ = "runs"

    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    command: Mapped[str] = mapped_column(String(32))
    config_hash: Mapped[str] = mapped_column(String(64), index=True)
    seed: Mapped[str] = mapped_column(String(20))  # u64 does not fit SQLite INTEGER
    versions: Mapped[dict] = mapped_column(JSON, default=dict)
    wall_time: Mapped[float] = mapped_column(Float, default=0.0)
    exit_code: Mapped[int] = mapped_column(Integer, default=0)
    output_dir: Mapped[str] = mapped_column(String(500))

    # Timestamps
    created_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True),
        server_default=func.now()
    )

    # Relationships
    checks: Mapped[list["CheckRecord"]] = relationship(
        back_populates="run",
        cascade="all, delete-orphan"
    )


class CheckRecord(Base):
    """Verdict of one check within a run."""
    __tablename__ = "check_results"

    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    run_id: Mapped[int] = mapped_column(ForeignKey("runs.id", ondelete="CASCADE"))
    name: Mapped[str] = mapped_column(String(100))
    verdict: Mapped[str] = mapped_column(String(16))
    # Headline statistics only, e.g. {"max_abs_z": 1.3, "critical_value": 3.48}
    statistics: Mapped[dict] = mapped_column(JSON, default=dict)

    # Relationship
    run: Mapped["Run"] = relationship(back_populates="checks")


class Database:
    """Database connection manager."""

    def __init__(self, database_url: str):
        url = make_url(database_url)
        if url.get_backend_name() == "sqlite" and url.database not in (None, "", ":memory:"):
            directory = os.path.dirname(url.database)
            if directory:
                os.makedirs(directory, exist_ok=True)

        self.engine = create_engine(database_url, echo=False)
        self.session = sessionmaker(self.engine, expire_on_commit=False)

    def create_tables(self):
        """Create all tables."""
        Base.metadata.create_all(self.engine)

    def record_run(
        self,
        command: str,
        config_hash: str,
        seed: int,
        versions: dict,
        wall_time: float,
        exit_code: int,
        output_dir: str,
        checks: Optional[list[tuple[str, str, dict]]] = None,
    ) -> int:
        """Store a run and its (name, verdict, statistics) checks; returns the run id."""
        run = Run(
            command=command,
            config_hash=config_hash,
            seed=str(seed),
            versions=versions,
            wall_time=wall_time,
            exit_code=exit_code,
            output_dir=output_dir,
        )
        for name, verdict, statistics in checks or []:
            run.checks.append(CheckRecord(name=name, verdict=verdict, statistics=statistics))
        with self.session() as session:
            session.add(run)
            session.commit()
            return run.id

    def runs_for(self, config_hash: str) -> list[Run]:
        """All runs of a configuration, oldest first, checks loaded."""
        with self.session() as session:
            result = session.execute(
                select(Run)
                .where(Run.config_hash == config_hash)
                .options(selectinload(Run.checks))
                .order_by(Run.id)
            )
            return list(result.scalars().all())

    def close(self):
        """Close database connection."""
        self.engine.dispose()


# Global database instance (initialized by the CLI)
db: Optional[Database] = None


def init_database(database_url: str) -> Database:
    """Initialize the database connection."""
    global db
    db = Database(database_url)
    db.create_tables()
    return db


def get_db() -> Database:
    """Get the database instance."""
    if db is None:
        raise RuntimeError("Database not initialized. Call init_database() first.")
    return db
