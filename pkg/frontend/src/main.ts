import { ApiClient } from "./api.js";
import { ConsoleController } from "./console.js";
import { DomView } from "./app.js";

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(
  params.get("api") ?? window.location.origin,
  params.get("token") ?? undefined,
);

const view = new DomView(document.getElementById("app")!);
const controller = new ConsoleController(api, view);
view.attach(controller);
controller.loadQueue("cluster_label");
