import { startRouter } from "./router.js";

const root = document.getElementById("app");
const nav = document.getElementById("nav");
if (root) startRouter(root, nav);
