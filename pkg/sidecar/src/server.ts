import { createApp } from "./app";

const port = Number(process.env.SIDECAR_PORT ?? 8787);
const app = createApp();

app.listen(port, () => {
  // eslint-disable-next-line no-console
  console.log(`scorer sidecar listening on :${port}`);
});
