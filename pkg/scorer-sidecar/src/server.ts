/**
 * HTTP server for the scoring protocol.
 *
 *   POST /v1/score  {request_id, metric_kind, items: [{src, hyp, ref}]}
 *                   -> {request_id, scores, model_id}
 *   GET  /v1/health -> {status, model_ids}
 *
 * Scores align index-for-index with items and the request_id is echoed
 * verbatim. Protocol violations answer 400 (naming the offending field)
 * or 413 for oversized batches; they never crash the service.
 *
 * Scorers load lazily on first use per metric and inference per metric is
 * serialized through a queue, so repeated identical requests return
 * identical responses regardless of connection concurrency.
 */

import { createServer, IncomingMessage, Server, ServerResponse } from "node:http";
import {
  createBertscoreScorer,
  createCometScorer,
  ScoreItem,
  Scorer,
} from "./scorers.js";

export interface SidecarConfig {
  host: string;
  port: number;
  cometModelId: string;
  bertscoreModelId: string;
  maxBatch: number;
  deterministic: boolean;
}

export const DEFAULT_CONFIG: SidecarConfig = {
  host: "127.0.0.1",
  port: 8800,
  cometModelId: "lexical-comet-blend/1",
  bertscoreModelId: "lexical-greedy-f1/1",
  maxBatch: 64,
  deterministic: true,
};

export function configFromEnv(env: NodeJS.ProcessEnv = process.env): SidecarConfig {
  return {
    host: env.SIDECAR_HOST ?? DEFAULT_CONFIG.host,
    port: env.SIDECAR_PORT !== undefined ? Number(env.SIDECAR_PORT) : DEFAULT_CONFIG.port,
    cometModelId: env.SIDECAR_COMET_MODEL ?? DEFAULT_CONFIG.cometModelId,
    bertscoreModelId: env.SIDECAR_BERTSCORE_MODEL ?? DEFAULT_CONFIG.bertscoreModelId,
    maxBatch: env.SIDECAR_MAX_BATCH !== undefined ? Number(env.SIDECAR_MAX_BATCH) : DEFAULT_CONFIG.maxBatch,
    deterministic: env.SIDECAR_DETERMINISTIC !== "0",
  };
}

type MetricKind = "comet" | "bertscore";

class ProtocolError extends Error {
  constructor(
    message: string,
    readonly field: string,
    readonly status: number = 400
  ) {
    super(message);
  }
}

interface ScorePayload {
  request_id: string;
  metric_kind: MetricKind;
  items: ScoreItem[];
}

function parsePayload(raw: unknown, maxBatch: number): ScorePayload {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError("request body must be a JSON object", "body");
  }
  const body = raw as Record<string, unknown>;
  if (typeof body.request_id !== "string" || body.request_id === "") {
    throw new ProtocolError("request_id must be a non-empty string", "request_id");
  }
  if (body.metric_kind !== "comet" && body.metric_kind !== "bertscore") {
    throw new ProtocolError(
      `unknown metric_kind ${JSON.stringify(body.metric_kind)}`,
      "metric_kind"
    );
  }
  if (!Array.isArray(body.items) || body.items.length === 0) {
    throw new ProtocolError("items must be a non-empty array", "items");
  }
  if (body.items.length > maxBatch) {
    throw new ProtocolError(
      `batch of ${body.items.length} exceeds max batch size ${maxBatch}`,
      "items",
      413
    );
  }
  const items: ScoreItem[] = [];
  body.items.forEach((entry, i) => {
    if (typeof entry !== "object" || entry === null) {
      throw new ProtocolError(`items[${i}] must be an object`, `items[${i}]`);
    }
    const item = entry as Record<string, unknown>;
    for (const key of ["src", "hyp", "ref"] as const) {
      if (item[key] !== undefined && typeof item[key] !== "string") {
        throw new ProtocolError(
          `items[${i}].${key} must be a string`,
          `items[${i}].${key}`
        );
      }
    }
    if (typeof item.hyp !== "string" || typeof item.ref !== "string") {
      throw new ProtocolError(
        `items[${i}] needs string hyp and ref`,
        `items[${i}]`
      );
    }
    const src = typeof item.src === "string" ? item.src : "";
    if (body.metric_kind === "comet" && src === "") {
      throw new ProtocolError(
        `comet requires a non-empty src (items[${i}].src)`,
        `items[${i}].src`
      );
    }
    items.push({ src, hyp: item.hyp, ref: item.ref });
  });
  return { request_id: body.request_id, metric_kind: body.metric_kind, items };
}

export class Sidecar {
  private scorers = new Map<MetricKind, Scorer>();
  private queues = new Map<MetricKind, Promise<unknown>>();
  readonly server: Server;

  constructor(readonly config: SidecarConfig = DEFAULT_CONFIG) {
    this.server = createServer((req, res) => this.route(req, res));
  }

  /** Lazy per-metric load; health reports which backends are ready. */
  private scorer(kind: MetricKind): Scorer {
    let scorer = this.scorers.get(kind);
    if (!scorer) {
      scorer =
        kind === "comet"
          ? createCometScorer(this.config.cometModelId)
          : createBertscoreScorer(this.config.bertscoreModelId);
      this.scorers.set(kind, scorer);
    }
    return scorer;
  }

  /** Serialize scoring per metric so inference order is deterministic. */
  private enqueue<T>(kind: MetricKind, task: () => T): Promise<T> {
    const prev = this.queues.get(kind) ?? Promise.resolve();
    const next = prev.then(() => task());
    this.queues.set(kind, next.catch(() => undefined));
    return next;
  }

  listen(): Promise<{ host: string; port: number }> {
    return new Promise((resolve) => {
      this.server.listen(this.config.port, this.config.host, () => {
        const addr = this.server.address();
        if (addr && typeof addr === "object") {
          resolve({ host: addr.address, port: addr.port });
        } else {
          resolve({ host: this.config.host, port: this.config.port });
        }
      });
    });
  }

  close(): Promise<void> {
    return new Promise((resolve, reject) =>
      this.server.close((err) => (err ? reject(err) : resolve()))
    );
  }

  private route(req: IncomingMessage, res: ServerResponse): void {
    if (req.method === "GET" && req.url === "/v1/health") {
      this.handleHealth(res);
      return;
    }
    if (req.method === "POST" && req.url === "/v1/score") {
      this.handleScore(req, res);
      return;
    }
    sendJson(res, 404, { error: { message: `no route for ${req.method} ${req.url}` } });
  }

  private handleHealth(res: ServerResponse): void {
    sendJson(res, 200, {
      status: "ok",
      model_ids: {
        comet: this.config.cometModelId,
        bertscore: this.config.bertscoreModelId,
      },
      states: {
        comet: this.scorers.has("comet") ? "ready" : "unloaded",
        bertscore: this.scorers.has("bertscore") ? "ready" : "unloaded",
      },
      deterministic: this.config.deterministic,
    });
  }

  private handleScore(req: IncomingMessage, res: ServerResponse): void {
    readBody(req)
      .then((text) => {
        let raw: unknown;
        try {
          raw = JSON.parse(text);
        } catch {
          throw new ProtocolError("request body is not valid JSON", "body");
        }
        const payload = parsePayload(raw, this.config.maxBatch);
        const scorer = this.scorer(payload.metric_kind);
        return this.enqueue(payload.metric_kind, () => ({
          request_id: payload.request_id,
          scores: payload.items.map((item) => scorer.score(item)),
          model_id: scorer.modelId,
        }));
      })
      .then((body) => sendJson(res, 200, body))
      .catch((err) => {
        if (err instanceof ProtocolError) {
          sendJson(res, err.status, {
            error: { message: err.message, field: err.field },
          });
        } else {
          sendJson(res, 500, { error: { message: String(err) } });
        }
      });
  }
}

function readBody(req: IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

function sendJson(res: ServerResponse, status: number, body: unknown): void {
  const data = Buffer.from(JSON.stringify(body), "utf-8");
  res.writeHead(status, {
    "Content-Type": "application/json; charset=utf-8",
    "Content-Length": data.length,
  });
  res.end(data);
}
