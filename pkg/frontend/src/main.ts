import { apiBaseFromLocation, Client } from "./api.js";
import { startRouter } from "./router.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const client = new Client(apiBaseFromLocation(window.location));
startRouter(root, client, window);
