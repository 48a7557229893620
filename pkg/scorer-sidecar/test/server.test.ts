import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { DEFAULT_CONFIG, Sidecar } from "../src/server.js";

let sidecar: Sidecar;
let base: string;

beforeAll(async () => {
  sidecar = new Sidecar({ ...DEFAULT_CONFIG, port: 0, maxBatch: 8 });
  const { host, port } = await sidecar.listen();
  base = `http://${host}:${port}`;
});

afterAll(async () => {
  await sidecar.close();
});

async function score(body: unknown): Promise<{ status: number; body: any }> {
  const res = await fetch(`${base}/v1/score`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  return { status: res.status, body: await res.json() };
}

function items(n: number) {
  return Array.from({ length: n }, (_, i) => ({
    src: `source ${i}`,
    hyp: `가설 ${i} 문장(term ${i})`,
    ref: `참조 ${i} 문장(term ${i})`,
  }));
}

describe("health", () => {
  it("reports status and both model ids", async () => {
    const res = await fetch(`${base}/v1/health`);
    expect(res.status).toBe(200);
    const body = await res.json();
    expect(body.status).toBe("ok");
    expect(Object.keys(body.model_ids).sort()).toEqual(["bertscore", "comet"]);
  });
});

describe("score protocol", () => {
  it("round-trips and aligns scores with items", async () => {
    const { status, body } = await score({
      request_id: "req-1",
      metric_kind: "bertscore",
      items: items(3),
    });
    expect(status).toBe(200);
    expect(body.request_id).toBe("req-1");
    expect(body.scores).toHaveLength(3);
    expect(body.model_id).toBe(DEFAULT_CONFIG.bertscoreModelId);
    for (const s of body.scores) {
      expect(Number.isFinite(s)).toBe(true);
    }
  });

  it("scores identically under any batch split", async () => {
    const all = items(6);
    const whole = await score({
      request_id: "w",
      metric_kind: "comet",
      items: all,
    });
    const first = await score({
      request_id: "a",
      metric_kind: "comet",
      items: all.slice(0, 2),
    });
    const rest = await score({
      request_id: "b",
      metric_kind: "comet",
      items: all.slice(2),
    });
    expect([...first.body.scores, ...rest.body.scores]).toEqual(whole.body.scores);
  });

  it("repeats identical requests with identical responses", async () => {
    const payload = { request_id: "same", metric_kind: "bertscore", items: items(4) };
    const one = await score(payload);
    const two = await score(payload);
    expect(one.body).toEqual(two.body);
  });

  it("bertscore self-pairs score 1.0 (within the documented band)", async () => {
    const text = "자기 유사성(self similarity) 검사 문장";
    const { body } = await score({
      request_id: "self",
      metric_kind: "bertscore",
      items: [{ src: "", hyp: text, ref: text }],
    });
    expect(Math.abs(body.scores[0] - 1.0)).toBeLessThanOrEqual(0.02);
    expect(body.scores[0]).toBe(1.0);
  });

  it("rejects empty items naming the field", async () => {
    const { status, body } = await score({
      request_id: "x",
      metric_kind: "bertscore",
      items: [],
    });
    expect(status).toBe(400);
    expect(body.error.field).toBe("items");
  });

  it("rejects unknown metric_kind naming the field", async () => {
    const { status, body } = await score({
      request_id: "x",
      metric_kind: "rouge",
      items: items(1),
    });
    expect(status).toBe(400);
    expect(body.error.field).toBe("metric_kind");
    expect(body.error.message).toContain("rouge");
  });

  it("rejects oversized batches with 413", async () => {
    const { status, body } = await score({
      request_id: "x",
      metric_kind: "bertscore",
      items: items(9), // maxBatch is 8 in this test server
    });
    expect(status).toBe(413);
    expect(body.error.message).toContain("max batch");
  });

  it("requires non-empty src for comet", async () => {
    const { status, body } = await score({
      request_id: "x",
      metric_kind: "comet",
      items: [{ src: "", hyp: "가", ref: "가" }],
    });
    expect(status).toBe(400);
    expect(body.error.field).toBe("items[0].src");
  });

  it("ignores src for bertscore", async () => {
    const { status } = await score({
      request_id: "x",
      metric_kind: "bertscore",
      items: [{ hyp: "가", ref: "가" }],
    });
    expect(status).toBe(200);
  });

  it("answers 400 on malformed JSON", async () => {
    const res = await fetch(`${base}/v1/score`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: "{not json",
    });
    expect(res.status).toBe(400);
  });

  it("404s unknown routes", async () => {
    const res = await fetch(`${base}/v1/nope`);
    expect(res.status).toBe(404);
  });
});
