#include <cstdio>
int main(){ printf("placeholder\n"); return 1; }
