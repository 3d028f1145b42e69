import { configFromEnv, createApp } from "./server.js";

const config = configFromEnv();
const app = createApp(config);

const server = app.listen(config.port, () => {
  const address = server.address();
  const port = typeof address === "object" && address ? address.port : config.port;
  console.log(
    `embed-service listening on :${port} (model=${config.modelName}, max_batch=${config.maxBatch})`,
  );
});

function shutdown(signal: string) {
  console.log(`${signal} received, shutting down`);
  server.close(() => process.exit(0));
}

process.on("SIGINT", () => shutdown("SIGINT"));
process.on("SIGTERM", () => shutdown("SIGTERM"));
