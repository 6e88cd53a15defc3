// Batch pipeline entry point. Subcommands cover the whole flow from
// benchmark generation through training, retrieval, corpus emission and
// evaluation. Placeholder while the library lands; filled in below.

int main() { return 0; }
