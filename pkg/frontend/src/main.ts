import { HttpApiClient } from "./api";
import { mountApp } from "./app";

function annotatorIdFromUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("annotator");
  if (fromQuery) {
    return fromQuery;
  }
  const stored = window.localStorage.getItem("annotator_id");
  if (stored) {
    return stored;
  }
  const generated = `anon-${Math.random().toString(36).slice(2, 10)}`;
  window.localStorage.setItem("annotator_id", generated);
  return generated;
}

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
mountApp(root, new HttpApiClient(""), annotatorIdFromUrl());
