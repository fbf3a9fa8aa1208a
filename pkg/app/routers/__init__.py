from app.routers import observables, problems

__all__ = ["observables", "problems"]
