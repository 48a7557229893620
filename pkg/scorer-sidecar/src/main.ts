/** Entry point: start the sidecar with env-derived configuration. */

import { configFromEnv, Sidecar } from "./server.js";

const config = configFromEnv();
if (!config.deterministic) {
  console.warn("warning: deterministic mode is off; scores may not reproduce");
}
const sidecar = new Sidecar(config);
sidecar.listen().then(({ host, port }) => {
  console.log(`scorer-sidecar listening on http://${host}:${port}`);
  console.log(
    `models: comet=${config.cometModelId} bertscore=${config.bertscoreModelId} ` +
      `max_batch=${config.maxBatch}`
  );
});
