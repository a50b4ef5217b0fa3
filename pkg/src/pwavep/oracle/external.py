"""
External gradient oracle over newline-delimited JSON.

The client spawns a command and talks to it over stdin/stdout, one request
and one response per line, synchronously:

    -> {"id": 1, "points": [[x, y, z], ...], "need_gradient": true,
        "target": null, "alpha": null}
    <- {"id": 1, "loss": ..., "ce_loss": ..., "feature_norm": ...,
        "class_scores": [...], "gradient": [[gx, gy, gz], ...] | null}

A server answering with an "error" field is reported as an OracleError.
serve() is the server side for the toy classifier (`pwavep serve-oracle`).
"""

import queue
import shlex
import subprocess
import sys
import threading
import time
from typing import IO, List, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ValidationError, model_validator

from pwavep.core.config import OracleConfig
from pwavep.core.errors import OracleError, PWavePError
from pwavep.core.settings import get_settings
from pwavep.geometry.cloud import PointCloud
from pwavep.oracle.base import Oracle

_EOF = object()


class OracleRequest(BaseModel):
    id: int
    points: List[List[float]]
    need_gradient: bool = True
    target: Optional[int] = None
    alpha: Optional[float] = None


class OracleResponse(BaseModel):
    id: Optional[int] = None
    loss: Optional[float] = None
    ce_loss: Optional[float] = None
    feature_norm: Optional[float] = None
    class_scores: List[float] = []
    gradient: Optional[List[List[float]]] = None
    error: Optional[str] = None

    @model_validator(mode="after")
    def _check_answer(self) -> "OracleResponse":
        # Error replies carry no numbers; every other reply must carry all of them
        if self.error is None:
            missing = [
                name for name in ("loss", "ce_loss", "feature_norm") if getattr(self, name) is None
            ]
            if missing:
                raise ValueError(f"response without an error is missing {', '.join(missing)}")
        return self


class ExternalOracle:
    def __init__(self, command: str, timeout: Optional[float] = None):
        """
        Args:
            command: Shell-style command line of the oracle process
            timeout: Seconds to wait per response; defaults to settings.oracle_timeout
        """
        if not command:
            raise OracleError("External oracle needs a command to run.")
        self.command = command
        self.timeout = get_settings().oracle_timeout if timeout is None else timeout
        self._next_id = 0
        self._lock = threading.Lock()
        self._lines: "queue.Queue" = queue.Queue()
        try:
            self._process = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as e:
            raise OracleError(f"Could not start external oracle {command!r}: {e}")
        self._reader = threading.Thread(target=self._read, daemon=True)
        self._reader.start()
        logger.debug(f"external oracle started: pid={self._process.pid} cmd={command!r}")

    def _read(self) -> None:
        for line in self._process.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def request(
        self,
        points: np.ndarray,
        need_gradient: bool = True,
        target: Optional[int] = None,
        alpha: Optional[float] = None,
    ) -> OracleResponse:
        """
        Send one cloud and wait for the answer.

        Raises:
            OracleError: Timeout, dead process, malformed or mismatched response
        """
        with self._lock:
            self._next_id += 1
            message = OracleRequest(
                id=self._next_id,
                points=np.asarray(points, dtype=np.float64).tolist(),
                need_gradient=need_gradient,
                target=target,
                alpha=alpha,
            )
            if self._process.poll() is not None:
                raise OracleError(
                    f"External oracle exited with code {self._process.returncode}."
                )
            try:
                self._process.stdin.write(message.model_dump_json() + "\n")
                self._process.stdin.flush()
            except (BrokenPipeError, OSError) as e:
                raise OracleError(f"External oracle closed its input: {e}")

            reply = self._await(message.id)
            if reply.error is not None:
                raise OracleError(f"External oracle reported an error: {reply.error}")
            if reply.id != message.id:
                raise OracleError(f"Oracle answered id {reply.id}, expected {message.id}.")
            if not reply.class_scores:
                raise OracleError("Oracle response has no class_scores.")
            return reply

    def _await(self, request_id: int) -> OracleResponse:
        """Next reply that is not a late answer to an earlier, timed-out request."""
        deadline = time.monotonic() + self.timeout
        while True:
            try:
                line = self._lines.get(timeout=max(deadline - time.monotonic(), 0.0))
            except queue.Empty:
                raise OracleError(
                    f"External oracle did not answer request {request_id} within "
                    f"{self.timeout:g} s. Raise PWAVEP_ORACLE_TIMEOUT for slow models."
                )
            if line is _EOF:
                raise OracleError("External oracle exited before answering.")

            try:
                reply = OracleResponse.model_validate_json(line)
            except ValidationError as e:
                raise OracleError(f"Malformed oracle response: {e}")
            if reply.id is not None and reply.id < request_id:
                logger.warning(f"dropping late oracle reply to request {reply.id}")
                continue
            return reply

    def close(self) -> None:
        if self._process.poll() is None:
            try:
                self._process.stdin.close()
                self._process.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._process.kill()
        logger.debug(f"external oracle stopped: code={self._process.returncode}")


def serve(model, config: Optional[OracleConfig] = None, stdin: IO[str] = None,
          stdout: IO[str] = None) -> int:
    """
    Answer oracle requests for a local model until stdin closes.

    Args:
        model: ToyClassifier
        config: Analytic-mode config (alpha, layer); external mode is not allowed here
        stdin: Request stream
        stdout: Response stream

    Returns:
        Number of requests answered
    """
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    config = config or OracleConfig()
    if config.mode == "external":
        config = config.model_copy(update={"mode": "analytic", "command": None})
    oracle = Oracle(model, config)

    answered = 0
    for line in stdin:
        if not line.strip():
            continue
        request_id = None
        try:
            request = OracleRequest.model_validate_json(line)
            request_id = request.id
            cloud = PointCloud(points=np.asarray(request.points, dtype=np.float64))
            out = oracle.evaluate(
                cloud, target=request.target, alpha=request.alpha, need_gradient=request.need_gradient
            )
            reply = OracleResponse(
                id=request.id,
                loss=out.loss,
                ce_loss=out.ce_loss,
                feature_norm=out.feature_norm,
                class_scores=out.class_scores.tolist(),
                gradient=None if out.coord_gradient is None else out.coord_gradient.tolist(),
            )
        except ValidationError as e:
            reply = OracleResponse(id=request_id, error=f"bad request: {e.error_count()} error(s)")
        except PWavePError as e:
            reply = OracleResponse(id=request_id, error=str(e))
        stdout.write(reply.model_dump_json() + "\n")
        stdout.flush()
        answered += 1
    return answered
