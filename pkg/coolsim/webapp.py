"""Small FastAPI application around the simulator.

Endpoints:

* ``GET /`` – HTML page with a model form and a trial-CSV upload form.
* ``GET /api/model`` – closed-form prediction as JSON.
* ``GET /report`` – standalone HTML report of the sensor transient and the
  phantom comparison.
* ``POST /fit`` – accepts a trial CSV and returns the psychometric report.

Start a development server with ``python -m coolsim.webapp``.
"""

from __future__ import annotations

import io
import logging
import os
from typing import Literal

import pandas as pd
from fastapi import FastAPI, File, HTTPException, Query, UploadFile
from fastapi.responses import HTMLResponse

from .config import ScenarioConfig, with_overrides
from .errors import CoolsimError, DegenerateDataError
from .experiment_processers import run_phantom_experiment, simulate_sensor_transient
from .pipeline import model_summary
from .psychophys_processers import fit_psychometric, read_trials_csv
from .viewers import gen_html_report, plot_comparison, plot_psychometric, plot_transient

logger = logging.getLogger(__name__)

app = FastAPI(title="coolsim")

_INDEX = """
<!DOCTYPE html>
<html>
    <head>
        <title>coolsim - cold-air thermal display simulator</title>
        <meta name="viewport" content="width=device-width, initial-scale=1.0">
        <style>
            body { font-family: system-ui, sans-serif; color: #333; background: #f7f8fa;
                   max-width: 720px; margin: 0 auto; padding: 32px 16px; }
            h1 { color: #2b6c8f; font-weight: 400; }
            form { background: #fff; border: 1px solid #dde1e6; border-radius: 6px;
                   padding: 16px; margin-bottom: 20px; }
            label { display: inline-block; min-width: 140px; }
        </style>
    </head>
    <body>
        <h1>coolsim</h1>
        <p>Temperature drop of a skin or phantom patch under a cold-air jet.</p>

        <form action="/api/model" method="get">
            <h2>Model</h2>
            <label for="preset">Preset</label>
            <select id="preset" name="preset">
                <option value="silicon">silicon</option>
                <option value="skin">skin</option>
            </select><br>
            <label for="u">Velocity (m/s)</label>
            <input id="u" name="u" type="number" step="0.1" value="3.0"><br>
            <label for="t">Time (s)</label>
            <input id="t" name="t" type="number" step="0.1" value="3.0"><br>
            <button type="submit">Predict</button>
        </form>

        <form action="/fit" method="post" enctype="multipart/form-data">
            <h2>Fit trials</h2>
            <input type="file" name="file" accept=".csv">
            <button type="submit">Fit</button>
        </form>

        <p><a href="/report">Experiment report</a></p>
    </body>
</html>
"""


@app.get("/", response_class=HTMLResponse)
async def index() -> HTMLResponse:
    """Return the landing page."""
    return HTMLResponse(_INDEX)


@app.get("/api/model")
async def api_model(
    u: float = Query(..., ge=0, description="flow velocity (m/s)"),
    t: float = Query(..., ge=0, description="exposure time (s)"),
    preset: Literal["silicon", "skin"] = "silicon",
    precision: Literal["full", "published"] = "published",
) -> dict:
    cfg = with_overrides(ScenarioConfig(), {"body.preset": preset})
    try:
        return model_summary(cfg, u, t, precision)
    except CoolsimError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/report", response_class=HTMLResponse)
async def report() -> str:
    """Sensor transient and phantom comparison with the default scenario."""
    cfg = ScenarioConfig()
    series = simulate_sensor_transient(cfg.transient.to_scenario())
    comparison = run_phantom_experiment()
    return gen_html_report(
        "Experiment report",
        [
            ("Sensor transient", plot_transient(series), None),
            ("Phantom comparison", plot_comparison(comparison), comparison),
        ],
    )


@app.post("/fit", response_class=HTMLResponse)
async def fit(file: UploadFile = File(...)) -> str:
    """Fit the uploaded trial CSV and return a standalone report page."""
    content = await file.read()
    try:
        records = read_trials_csv(io.StringIO(content.decode("utf-8")))
        result = fit_psychometric(records)
    except DegenerateDataError as exc:
        raise HTTPException(status_code=422, detail=f"cannot fit: {exc}") from exc
    except (CoolsimError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    logger.info("Fitted %s: JND %.4f m/s", file.filename, result.jnd)
    levels = pd.DataFrame(result.to_dict()["levels"])
    return gen_html_report(
        "Velocity discrimination", [("Psychometric fit", plot_psychometric(result), levels)]
    )


def main() -> None:
    """Start a Uvicorn development server."""

    import uvicorn

    port = int(os.getenv("PORT", 8000))
    uvicorn.run("coolsim.webapp:app", host="0.0.0.0", port=port, reload=False)


if __name__ == "__main__":  # pragma: no cover - manual server start
    main()
