// Browser bootstrap: wire the real transports and mount.

import { GatewayClient } from "./api.js";
import { mountApp } from "./app.js";

const api = new GatewayClient(
  location.origin,
  (url, init) => fetch(url, init as RequestInit),
  (url) => new WebSocket(url),
);

mountApp(document.getElementById("app")!, api);
