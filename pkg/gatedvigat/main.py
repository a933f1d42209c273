from fastapi import FastAPI

from gatedvigat.api import router

app = FastAPI(title="gatedvigat API", version="0.1.0")

# /health, /infer, /explain
app.include_router(router)
