// acceptance suite, filled in last
int main() { return 0; }
