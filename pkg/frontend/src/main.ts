import { mount } from "./app";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const app = mount(root, {
  onSession: (sessionId) => {
    window.location.hash = sessionId;
  },
});

const existing = window.location.hash.slice(1);
if (existing) app.open(existing);
